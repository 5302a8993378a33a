use std::io::{Cursor, Write};
use std::path::Path;

use super::time::{format_date, format_time};
use super::*;

fn opt(v: &Option<String>) -> &str {
    v.as_deref().unwrap_or("")
}

fn opt_num<T: ToString>(v: Option<T>) -> String {
    v.map(|n| n.to_string()).unwrap_or_default()
}

fn table<const N: usize>(header: [&str; N], rows: impl Iterator<Item = [String; N]>) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Renders every present table as GTFS text, in a fixed column layout.
pub fn write_feed_tables(feed: &Feed) -> Vec<(&'static str, Vec<u8>)> {
    let mut out = vec![
        (
            "agency",
            table(
                ["agency_id", "agency_name", "agency_url", "agency_timezone"],
                feed.agencies
                    .iter()
                    .map(|a| [opt(&a.agency_id).into(), a.name.clone(), a.url.clone(), a.timezone.clone()]),
            ),
        ),
        (
            "stops",
            table(
                ["stop_id", "stop_name", "stop_lat", "stop_lon"],
                feed.stops.iter().map(|s| [s.stop_id.clone(), s.name.clone(), s.lat.to_string(), s.lon.to_string()]),
            ),
        ),
        (
            "routes",
            table(
                ["route_id", "agency_id", "route_short_name", "route_long_name", "route_type"],
                feed.routes.iter().map(|r| {
                    [
                        r.route_id.clone(),
                        opt(&r.agency_id).into(),
                        r.short_name.clone(),
                        r.long_name.clone(),
                        r.route_type.to_string(),
                    ]
                }),
            ),
        ),
        (
            "trips",
            table(
                ["route_id", "service_id", "trip_id", "shape_id"],
                feed.trips
                    .iter()
                    .map(|t| [t.route_id.clone(), t.service_id.clone(), t.trip_id.clone(), opt(&t.shape_id).into()]),
            ),
        ),
        (
            "stop_times",
            table(
                ["trip_id", "arrival_time", "departure_time", "stop_id", "stop_sequence"],
                feed.stop_times.iter().map(|st| {
                    [
                        st.trip_id.clone(),
                        format_time(st.arrival_s),
                        format_time(st.departure_s),
                        st.stop_id.clone(),
                        st.stop_sequence.to_string(),
                    ]
                }),
            ),
        ),
    ];
    if !feed.calendars.is_empty() || feed.calendar_exceptions.is_empty() {
        out.push((
            "calendar",
            table(
                [
                    "service_id",
                    "monday",
                    "tuesday",
                    "wednesday",
                    "thursday",
                    "friday",
                    "saturday",
                    "sunday",
                    "start_date",
                    "end_date",
                ],
                feed.calendars.iter().map(|c| {
                    let d = |i: usize| if c.weekday_mask[i] { "1" } else { "0" }.to_string();
                    [
                        c.service_id.clone(),
                        d(0),
                        d(1),
                        d(2),
                        d(3),
                        d(4),
                        d(5),
                        d(6),
                        format_date(c.start_date),
                        format_date(c.end_date),
                    ]
                }),
            ),
        ));
    }
    if !feed.calendar_exceptions.is_empty() {
        out.push((
            "calendar_dates",
            table(
                ["service_id", "date", "exception_type"],
                feed.calendar_exceptions.iter().map(|e| {
                    let kind = match e.kind {
                        ExceptionKind::Added => "1",
                        ExceptionKind::Removed => "2",
                    };
                    [e.service_id.clone(), format_date(e.date), kind.to_string()]
                }),
            ),
        ));
    }
    if let Some(rows) = &feed.frequencies {
        out.push((
            "frequencies",
            table(
                ["trip_id", "start_time", "end_time", "headway_secs", "exact_times"],
                rows.iter().map(|f| {
                    [
                        f.trip_id.clone(),
                        format_time(f.start_s),
                        format_time(f.end_s),
                        f.headway_s.to_string(),
                        u8::from(f.exact_times).to_string(),
                    ]
                }),
            ),
        ));
    }
    if let Some(rows) = &feed.transfers {
        out.push((
            "transfers",
            table(
                ["from_stop_id", "to_stop_id", "transfer_type", "min_transfer_time"],
                rows.iter().map(|t| {
                    [
                        t.from_stop_id.clone(),
                        t.to_stop_id.clone(),
                        t.transfer_type.to_string(),
                        t.min_transfer_s.to_string(),
                    ]
                }),
            ),
        ));
    }
    if let Some(rows) = &feed.shapes {
        out.push((
            "shapes",
            table(
                ["shape_id", "shape_pt_lat", "shape_pt_lon", "shape_pt_sequence"],
                rows.iter().map(|p| [p.shape_id.clone(), p.lat.to_string(), p.lon.to_string(), p.sequence.to_string()]),
            ),
        ));
    }
    if let Some(rows) = &feed.fare_attributes {
        out.push((
            "fare_attributes",
            table(
                ["fare_id", "price", "currency_type", "payment_method", "transfers"],
                rows.iter().map(|f| {
                    [
                        f.fare_id.clone(),
                        f.price.clone(),
                        f.currency_type.clone(),
                        f.payment_method.to_string(),
                        opt_num(f.transfers),
                    ]
                }),
            ),
        ));
    }
    if let Some(rows) = &feed.fare_rules {
        out.push((
            "fare_rules",
            table(
                ["fare_id", "route_id", "origin_id", "destination_id", "contains_id"],
                rows.iter().map(|r| {
                    [
                        r.fare_id.clone(),
                        opt(&r.route_id).into(),
                        opt(&r.origin_id).into(),
                        opt(&r.destination_id).into(),
                        opt(&r.contains_id).into(),
                    ]
                }),
            ),
        ));
    }
    out
}

pub fn write_feed_dir(feed: &Feed, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    for (name, bytes) in write_feed_tables(feed) {
        std::fs::write(dir.join(format!("{name}.txt")), bytes)?;
    }
    Ok(())
}

/// Packs the feed as a zip archive in memory.
pub fn write_feed_zip(feed: &Feed) -> Result<Vec<u8>> {
    let mut zip = zip::ZipWriter::new(Cursor::new(Vec::new()));
    let options = zip::write::SimpleFileOptions::default().compression_method(zip::CompressionMethod::Deflated);
    for (name, bytes) in write_feed_tables(feed) {
        zip.start_file(format!("{name}.txt"), options)?;
        zip.write_all(&bytes)?;
    }
    Ok(zip.finish()?.into_inner())
}
