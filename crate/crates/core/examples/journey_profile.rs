//! Journey time between two places across a departure window, split into
//! walking, waiting and in-vehicle time.
//!
//!     cargo run --example journey_profile -- S1 S6 07:30-09:00 5

use gtfs2stn_core::gtfs::time::{format_time, parse_window};
use gtfs2stn_core::network::{build_network, BuildConfig};
use gtfs2stn_core::router::{journey_profile, profile_table, QueryEndpoint};
use gtfs2stn_core::synth::three_route_feed;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    // Endpoints are stop ids or "lat,lon".
    let origin: QueryEndpoint = args.first().map_or("S1", String::as_str).parse()?;
    let dest: QueryEndpoint = args.get(1).map_or("S6", String::as_str).parse()?;
    let (start, end) = parse_window(args.get(2).map_or("07:30-09:00", String::as_str))?;
    let step_min: u32 = args.get(3).map_or(Ok(5), |s| s.parse())?;

    let net = build_network(&three_route_feed(), &BuildConfig::new(["WKDY"]))?;
    let profile = journey_profile(&net, &origin, &dest, start, end, step_min * 60)?;
    print!("{}", profile_table(&profile));

    // Leg-by-leg view of the first reachable sample.
    if let Some(j) = profile.samples.iter().find_map(|s| s.journey.as_ref()) {
        println!();
        for leg in &j.legs {
            println!(
                "{} {:?} {} -> {} {}",
                format_time(leg.start_s),
                leg.kind,
                leg.from_stop.as_deref().unwrap_or("(start)"),
                leg.to_stop.as_deref().unwrap_or("(end)"),
                leg.trip_id.as_deref().unwrap_or("")
            );
        }
    }
    Ok(())
}
