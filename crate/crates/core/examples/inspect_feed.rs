//! Load a GTFS feed (zip or directory), print table sizes, validation
//! findings, and which services run on a given date.
//!
//!     cargo run --example inspect_feed -- fixtures/frequency-loop 20240704

use gtfs2stn_core::gtfs::{active_service_ids, load_feed, time::parse_date, validate};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let path =
        args.next().unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/frequency-loop").into());
    let feed = load_feed(&path)?;

    let report = validate(&feed);
    for c in &report.counts {
        println!("{:<16}{:>8}", c.table, c.rows);
    }
    for f in &report.errors {
        println!("{} {}:{} {}", f.severity, f.table, f.row.map(|r| r.to_string()).unwrap_or_default(), f.message);
    }
    println!("services: {:?}", feed.service_ids());

    if let Some(date) = args.next() {
        let date = parse_date(&date)?;
        println!("running on {date}: {:?}", active_service_ids(&feed, date));
    }
    Ok(())
}
