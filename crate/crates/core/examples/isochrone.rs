//! Travel-time bands from one stop on a synthetic grid city, written as
//! GeoJSON.
//!
//!     cargo run --release --example isochrone -- L20S25 07:00:00 60 /tmp/iso.geojson

use gtfs2stn_core::gtfs::time::parse_clock;
use gtfs2stn_core::network::{build_network, BuildConfig};
use gtfs2stn_core::router::{isochrone, isochrone_geojson, HyperNode, IsochroneQuery};
use gtfs2stn_core::synth::{grid_city, GridCity};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let origin = args.first().map_or("L20S25", String::as_str);
    let depart = parse_clock(args.get(1).map_or("07:00:00", String::as_str))?;
    let cutoff_min: u32 = args.get(2).map_or(Ok(60), |s| s.parse())?;

    let net = build_network(&grid_city(&GridCity::default()), &BuildConfig::new(["WKDY"]))?;
    let t = std::time::Instant::now();
    let result = isochrone(&net, &IsochroneQuery::new(HyperNode::stop(origin, depart), cutoff_min * 60))?;
    println!("{} stops reached in {:?}", result.stop_times.len(), t.elapsed());
    for band in &result.bands {
        println!(
            "  {:>3} min  {:>5} stops  {:>8.2} km²",
            band.threshold_s / 60,
            band.circles.len(),
            band.area_m2() / 1e6
        );
    }
    if let Some(out) = args.get(3) {
        std::fs::write(out, isochrone_geojson(&result))?;
    }
    Ok(())
}
