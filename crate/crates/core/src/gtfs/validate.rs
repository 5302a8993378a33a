use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Feed, TableCount};

/// Stop times at or beyond two service days are flagged.
const MAX_EVENT_S: u32 = 2 * 86_400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Fatal,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Fatal => "fatal",
            Severity::Warning => "warning",
        })
    }
}

/// One problem found in a feed. `row` is the 1-based source line when the
/// finding came from parsing, otherwise the 1-based row index in the table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub severity: Severity,
    pub table: String,
    pub row: Option<u64>,
    pub message: String,
}

impl Finding {
    pub fn fatal(table: &str, row: Option<u64>, message: impl Into<String>) -> Self {
        Finding { severity: Severity::Fatal, table: table.to_string(), row, message: message.into() }
    }

    pub fn warning(table: &str, row: Option<u64>, message: impl Into<String>) -> Self {
        Finding { severity: Severity::Warning, table: table.to_string(), row, message: message.into() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<Finding>,
    pub counts: Vec<TableCount>,
}

impl ValidationReport {
    pub fn fatal_count(&self) -> usize {
        self.errors.iter().filter(|f| f.severity == Severity::Fatal).count()
    }

    pub fn has_fatal(&self) -> bool {
        self.fatal_count() > 0
    }

    /// Comma-separated document: a `severity,table,row,message` header and
    /// one line per finding.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["severity", "table", "row", "message"]).expect("in-memory write");
        for f in &self.errors {
            let row = f.row.map(|r| r.to_string()).unwrap_or_default();
            w.write_record([f.severity.to_string().as_str(), &f.table, &row, &f.message]).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }
}

/// Checks foreign keys (fatal), schedule ordering, coordinates and
/// duplicate keys (warnings). Load-time notes are carried over.
pub fn validate(feed: &Feed) -> ValidationReport {
    let mut errors = feed.notes.clone();
    let row = |i: usize| Some(i as u64 + 1);

    let mut stop_ids = HashSet::with_capacity(feed.stops.len());
    for (i, s) in feed.stops.iter().enumerate() {
        if !stop_ids.insert(s.stop_id.as_str()) {
            errors.push(Finding::warning("stops", row(i), format!("duplicate stop_id `{}`", s.stop_id)));
        }
        if !(-90.0..=90.0).contains(&s.lat) || !(-180.0..=180.0).contains(&s.lon) {
            errors.push(Finding::warning(
                "stops",
                row(i),
                format!("stop `{}` coordinate ({}, {}) out of range", s.stop_id, s.lat, s.lon),
            ));
        }
    }

    let agency_ids: HashSet<&str> = feed.agencies.iter().filter_map(|a| a.agency_id.as_deref()).collect();
    let mut route_ids = HashSet::with_capacity(feed.routes.len());
    for (i, r) in feed.routes.iter().enumerate() {
        if !route_ids.insert(r.route_id.as_str()) {
            errors.push(Finding::warning("routes", row(i), format!("duplicate route_id `{}`", r.route_id)));
        }
        if let Some(a) = &r.agency_id {
            if !agency_ids.is_empty() && !agency_ids.contains(a.as_str()) {
                errors.push(Finding::fatal(
                    "routes",
                    row(i),
                    format!("route `{}` references unknown agency `{a}`", r.route_id),
                ));
            }
        }
    }

    let service_ids = feed.service_ids();
    let mut trip_ids = HashSet::with_capacity(feed.trips.len());
    for (i, t) in feed.trips.iter().enumerate() {
        if !trip_ids.insert(t.trip_id.as_str()) {
            errors.push(Finding::warning("trips", row(i), format!("duplicate trip_id `{}`", t.trip_id)));
        }
        if !route_ids.contains(t.route_id.as_str()) {
            errors.push(Finding::fatal(
                "trips",
                row(i),
                format!("trip `{}` references unknown route `{}`", t.trip_id, t.route_id),
            ));
        }
        if !service_ids.contains(t.service_id.as_str()) {
            errors.push(Finding::fatal(
                "trips",
                row(i),
                format!("trip `{}` references unknown service `{}`", t.trip_id, t.service_id),
            ));
        }
    }

    let mut prev: Option<(usize, &super::StopTime)> = None;
    for (i, st) in feed.stop_times.iter().enumerate() {
        if !trip_ids.contains(st.trip_id.as_str()) {
            errors.push(Finding::fatal("stop_times", row(i), format!("references unknown trip `{}`", st.trip_id)));
        }
        if !stop_ids.contains(st.stop_id.as_str()) {
            errors.push(Finding::fatal("stop_times", row(i), format!("references unknown stop `{}`", st.stop_id)));
        }
        if st.arrival_s > st.departure_s {
            errors.push(Finding::warning(
                "stop_times",
                row(i),
                format!("trip `{}` seq {}: arrival after departure", st.trip_id, st.stop_sequence),
            ));
        }
        if st.arrival_s >= MAX_EVENT_S || st.departure_s >= MAX_EVENT_S {
            errors.push(Finding::warning(
                "stop_times",
                row(i),
                format!("trip `{}` seq {}: time beyond 48:00:00", st.trip_id, st.stop_sequence),
            ));
        }
        if let Some((_, p)) = prev.filter(|(_, p)| p.trip_id == st.trip_id) {
            if p.stop_sequence >= st.stop_sequence {
                errors.push(Finding::warning(
                    "stop_times",
                    row(i),
                    format!("trip `{}`: stop_sequence {} does not increase", st.trip_id, st.stop_sequence),
                ));
            }
            if p.departure_s > st.arrival_s {
                errors.push(Finding::warning(
                    "stop_times",
                    row(i),
                    format!(
                        "trip `{}`: arrival at seq {} precedes departure from seq {}",
                        st.trip_id, st.stop_sequence, p.stop_sequence
                    ),
                ));
            }
        }
        prev = Some((i, st));
    }

    for (i, c) in feed.calendars.iter().enumerate() {
        if c.start_date > c.end_date {
            errors.push(Finding::warning(
                "calendar",
                row(i),
                format!("service `{}` ends before it starts", c.service_id),
            ));
        }
    }
    let mut exception_keys = HashSet::new();
    for (i, e) in feed.calendar_exceptions.iter().enumerate() {
        if !exception_keys.insert((e.service_id.as_str(), e.date)) {
            errors.push(Finding::warning(
                "calendar_dates",
                row(i),
                format!("duplicate exception for `{}` on {}", e.service_id, e.date),
            ));
        }
    }

    for (i, f) in feed.frequencies.iter().flatten().enumerate() {
        if !trip_ids.contains(f.trip_id.as_str()) {
            errors.push(Finding::fatal("frequencies", row(i), format!("references unknown trip `{}`", f.trip_id)));
        }
        if f.start_s >= f.end_s || f.headway_s == 0 {
            errors.push(Finding::warning(
                "frequencies",
                row(i),
                format!("trip `{}`: empty window or zero headway", f.trip_id),
            ));
        }
    }
    for (i, t) in feed.transfers.iter().flatten().enumerate() {
        for id in [&t.from_stop_id, &t.to_stop_id] {
            if !stop_ids.contains(id.as_str()) {
                errors.push(Finding::fatal("transfers", row(i), format!("references unknown stop `{id}`")));
            }
        }
    }

    let shape_ids: HashSet<&str> = feed.shapes.iter().flatten().map(|p| p.shape_id.as_str()).collect();
    if feed.shapes.is_some() {
        let mut reported = HashMap::new();
        for (i, t) in feed.trips.iter().enumerate() {
            if let Some(s) = &t.shape_id {
                if !shape_ids.contains(s.as_str()) && reported.insert(s.as_str(), i).is_none() {
                    errors.push(Finding::fatal(
                        "trips",
                        row(i),
                        format!("trip `{}` references unknown shape `{s}`", t.trip_id),
                    ));
                }
            }
        }
    }

    ValidationReport { errors, counts: feed.table_counts() }
}
