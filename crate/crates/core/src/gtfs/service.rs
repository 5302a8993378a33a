use std::collections::{BTreeSet, HashMap, HashSet};

use chrono::{Datelike, NaiveDate};

use super::*;

/// Service ids running on `date`: the calendar covers the date with the
/// weekday bit set and no removal exception, or an addition exception exists.
pub fn active_service_ids(feed: &Feed, date: NaiveDate) -> BTreeSet<String> {
    let weekday = date.weekday().num_days_from_monday() as usize;
    let mut active: BTreeSet<String> = feed
        .calendars
        .iter()
        .filter(|c| c.start_date <= date && date <= c.end_date && c.weekday_mask[weekday])
        .map(|c| c.service_id.clone())
        .collect();
    for e in feed.calendar_exceptions.iter().filter(|e| e.date == date) {
        match e.kind {
            ExceptionKind::Removed => {
                active.remove(&e.service_id);
            }
            ExceptionKind::Added => {
                active.insert(e.service_id.clone());
            }
        }
    }
    active
}

/// Trip ids whose service is in `services`, in feed order.
pub fn trips_for_services<'a, S: AsRef<str>>(feed: &'a Feed, services: &[S]) -> Result<Vec<&'a str>> {
    if services.is_empty() {
        return Err(GtfsError::EmptyServiceSet);
    }
    let known = feed.service_ids();
    let mut wanted = HashSet::with_capacity(services.len());
    for s in services {
        let s = s.as_ref();
        if !known.contains(s) {
            return Err(GtfsError::UnknownServiceId(s.to_string()));
        }
        wanted.insert(s);
    }
    Ok(feed.trips.iter().filter(|t| wanted.contains(t.service_id.as_str())).map(|t| t.trip_id.as_str()).collect())
}

/// Replaces every frequency-based template trip with explicit copies, one
/// per departure `start, start + headway, ...` strictly below `end`. Each
/// copy is shifted so its first departure lands on that time. The result
/// has no frequencies table, so a second call is a no-op.
pub fn expand_frequencies(feed: &Feed) -> Result<Feed> {
    let Some(freqs) = feed.frequencies.as_ref().filter(|f| !f.is_empty()) else {
        return Ok(feed.clone());
    };
    let trip_pos: HashMap<&str, usize> = feed.trips.iter().enumerate().map(|(i, t)| (t.trip_id.as_str(), i)).collect();
    let mut by_template: HashMap<&str, Vec<&Frequency>> = HashMap::new();
    for f in freqs {
        if !trip_pos.contains_key(f.trip_id.as_str()) {
            return Err(GtfsError::UnknownTripId(f.trip_id.clone()));
        }
        by_template.entry(f.trip_id.as_str()).or_default().push(f);
    }
    let schedule: HashMap<&str, &[StopTime]> = feed.stop_times_by_trip().map(|c| (c[0].trip_id.as_str(), c)).collect();

    let mut taken: HashSet<String> = feed.trips.iter().map(|t| t.trip_id.clone()).collect();
    let mut trips = Vec::with_capacity(feed.trips.len());
    let mut stop_times = Vec::with_capacity(feed.stop_times.len());
    for trip in &feed.trips {
        let Some(rows) = by_template.get(trip.trip_id.as_str()) else {
            trips.push(trip.clone());
            continue;
        };
        let template = schedule.get(trip.trip_id.as_str()).copied().unwrap_or(&[]);
        let first_departure = template.first().map_or(0, |st| i64::from(st.departure_s));
        let mut n = 0usize;
        for f in rows {
            if f.headway_s == 0 {
                continue;
            }
            let mut dep = f.start_s;
            while dep < f.end_s {
                let mut id = format!("{}#{n}", trip.trip_id);
                while taken.contains(&id) {
                    id.push('#');
                }
                taken.insert(id.clone());
                let shift = i64::from(dep) - first_departure;
                let moved = |s: u32| (i64::from(s) + shift).max(0) as u32;
                stop_times.extend(template.iter().map(|st| StopTime {
                    trip_id: id.clone(),
                    arrival_s: moved(st.arrival_s),
                    departure_s: moved(st.departure_s),
                    ..st.clone()
                }));
                trips.push(Trip { trip_id: id, ..trip.clone() });
                n += 1;
                dep += f.headway_s;
            }
        }
    }
    stop_times.extend(feed.stop_times.iter().filter(|st| !by_template.contains_key(st.trip_id.as_str())).cloned());

    let mut out = Feed { trips, stop_times, frequencies: None, ..feed.clone() };
    out.normalize_stop_times();
    Ok(out)
}
