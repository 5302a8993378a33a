//! In-memory image of a static GTFS feed.
//!
//! [`load_feed`] reads a zip archive or a directory of tables, [`validate`]
//! checks referential integrity and schedule ordering, and the service
//! helpers resolve which trips run on a date or service selection.

mod export;
mod parse;
mod service;
pub mod time;
mod validate;
mod write;

use std::collections::BTreeSet;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

pub use export::{shapes_geojson, stops_geojson, table_page, TablePage};
pub use parse::{load_feed, load_feed_from_tables, load_feed_from_zip_bytes};
pub use service::{active_service_ids, expand_frequencies, trips_for_services};
pub use validate::{validate, Finding, Severity, ValidationReport};
pub use write::{write_feed_dir, write_feed_tables, write_feed_zip};

/// Errors raised while loading a feed or resolving services.
#[derive(Debug, thiserror::Error)]
pub enum GtfsError {
    #[error("missing table: {0}")]
    MissingTable(String),
    #[error("{table}: missing required column `{column}`")]
    MissingColumn { table: String, column: String },
    #[error("{table} line {line}: {reason}")]
    MalformedRow { table: String, line: u64, reason: String },
    #[error("bad time `{0}`")]
    BadTime(String),
    #[error("unknown service id `{0}`")]
    UnknownServiceId(String),
    #[error("empty service selection")]
    EmptyServiceSet,
    #[error("frequency row references unknown trip `{0}`")]
    UnknownTripId(String),
    #[error("zip archive: {0}")]
    Zip(#[from] zip::result::ZipError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = GtfsError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agency {
    pub agency_id: Option<String>,
    pub name: String,
    pub url: String,
    pub timezone: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stop {
    pub stop_id: String,
    pub name: String,
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub route_id: String,
    pub agency_id: Option<String>,
    pub short_name: String,
    pub long_name: String,
    pub route_type: u16,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trip {
    pub trip_id: String,
    pub route_id: String,
    pub service_id: String,
    pub shape_id: Option<String>,
}

/// One scheduled call of a trip at a stop. Times are seconds since the
/// service day's midnight and may exceed 24h.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StopTime {
    pub trip_id: String,
    pub stop_id: String,
    pub stop_sequence: u32,
    pub arrival_s: u32,
    pub departure_s: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceCalendar {
    pub service_id: String,
    /// Monday first.
    pub weekday_mask: [bool; 7],
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExceptionKind {
    Added,
    Removed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalendarException {
    pub service_id: String,
    pub date: NaiveDate,
    pub kind: ExceptionKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frequency {
    pub trip_id: String,
    pub start_s: u32,
    pub end_s: u32,
    pub headway_s: u32,
    pub exact_times: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transfer {
    pub from_stop_id: String,
    pub to_stop_id: String,
    pub transfer_type: u8,
    pub min_transfer_s: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapePoint {
    pub shape_id: String,
    pub lat: f64,
    pub lon: f64,
    pub sequence: u32,
}

/// Parsed and kept for completeness; routing ignores fares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FareAttribute {
    pub fare_id: String,
    pub price: String,
    pub currency_type: String,
    pub payment_method: u8,
    pub transfers: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FareRule {
    pub fare_id: String,
    pub route_id: Option<String>,
    pub origin_id: Option<String>,
    pub destination_id: Option<String>,
    pub contains_id: Option<String>,
}

/// A whole feed. `stop_times` is grouped by trip (in `trips` order) and
/// ordered by `stop_sequence` within each trip.
///
/// Equality compares the tables only; `notes` holds load-time findings
/// such as dropped duplicate rows.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Feed {
    pub agencies: Vec<Agency>,
    pub stops: Vec<Stop>,
    pub routes: Vec<Route>,
    pub trips: Vec<Trip>,
    pub stop_times: Vec<StopTime>,
    pub calendars: Vec<ServiceCalendar>,
    pub calendar_exceptions: Vec<CalendarException>,
    pub frequencies: Option<Vec<Frequency>>,
    pub transfers: Option<Vec<Transfer>>,
    pub shapes: Option<Vec<ShapePoint>>,
    pub fare_attributes: Option<Vec<FareAttribute>>,
    pub fare_rules: Option<Vec<FareRule>>,
    #[serde(skip)]
    pub notes: Vec<Finding>,
}

impl PartialEq for Feed {
    fn eq(&self, other: &Self) -> bool {
        self.agencies == other.agencies
            && self.stops == other.stops
            && self.routes == other.routes
            && self.trips == other.trips
            && self.stop_times == other.stop_times
            && self.calendars == other.calendars
            && self.calendar_exceptions == other.calendar_exceptions
            && self.frequencies == other.frequencies
            && self.transfers == other.transfers
            && self.shapes == other.shapes
            && self.fare_attributes == other.fare_attributes
            && self.fare_rules == other.fare_rules
    }
}

/// Row counts per table, as reported by validation and previews.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableCount {
    pub table: String,
    pub rows: usize,
}

impl Feed {
    /// Every service id mentioned by a calendar row or an exception.
    pub fn service_ids(&self) -> BTreeSet<&str> {
        self.calendars
            .iter()
            .map(|c| c.service_id.as_str())
            .chain(self.calendar_exceptions.iter().map(|e| e.service_id.as_str()))
            .collect()
    }

    /// Consecutive runs of `stop_times` sharing a trip id.
    pub fn stop_times_by_trip(&self) -> impl Iterator<Item = &[StopTime]> {
        self.stop_times.chunk_by(|a, b| a.trip_id == b.trip_id)
    }

    pub fn table_counts(&self) -> Vec<TableCount> {
        let mut counts = vec![
            ("agency", Some(self.agencies.len())),
            ("stops", Some(self.stops.len())),
            ("routes", Some(self.routes.len())),
            ("trips", Some(self.trips.len())),
            ("stop_times", Some(self.stop_times.len())),
            ("calendar", Some(self.calendars.len())),
            ("calendar_dates", Some(self.calendar_exceptions.len())),
            ("frequencies", self.frequencies.as_ref().map(Vec::len)),
            ("transfers", self.transfers.as_ref().map(Vec::len)),
            ("shapes", self.shapes.as_ref().map(Vec::len)),
            ("fare_attributes", self.fare_attributes.as_ref().map(Vec::len)),
            ("fare_rules", self.fare_rules.as_ref().map(Vec::len)),
        ];
        counts.retain(|(_, n)| n.is_some());
        counts
            .into_iter()
            .map(|(table, rows)| TableCount { table: table.to_string(), rows: rows.unwrap_or(0) })
            .collect()
    }

    /// Sorts `stop_times` into the canonical grouping: trips in feed order,
    /// then `stop_sequence`. Rows whose trip is unknown go last, in their
    /// original order.
    pub fn normalize_stop_times(&mut self) {
        let order: std::collections::HashMap<&str, usize> =
            self.trips.iter().enumerate().map(|(i, t)| (t.trip_id.as_str(), i)).collect();
        let mut keyed: Vec<(usize, u32, usize)> = self
            .stop_times
            .iter()
            .enumerate()
            .map(|(pos, st)| {
                let trip = order.get(st.trip_id.as_str()).copied().unwrap_or(usize::MAX);
                let seq = if trip == usize::MAX { 0 } else { st.stop_sequence };
                (trip, seq, pos)
            })
            .collect();
        keyed.sort_unstable();
        let mut taken: Vec<Option<StopTime>> = std::mem::take(&mut self.stop_times).into_iter().map(Some).collect();
        self.stop_times = keyed.into_iter().filter_map(|(_, _, pos)| taken[pos].take()).collect();
    }
}
