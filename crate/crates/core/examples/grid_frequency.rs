//! Average hourly visits per stop over a regular lat/lon grid.
//!
//!     cargo run --example grid_frequency -- 0.005 07:00-09:00 /tmp/grid.geojson

use gtfs2stn_core::analysis::{grid_frequency, map_csv, map_geojson, GridSpec, TimeWindow};
use gtfs2stn_core::geo::GeoPoint;
use gtfs2stn_core::gtfs::time::parse_window;
use gtfs2stn_core::synth::{grid_city, GridCity};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let cell: f64 = args.first().map_or(Ok(0.005), |s| s.parse())?;
    let (start, end) = parse_window(args.get(1).map_or("07:00-09:00", String::as_str))?;

    let feed = grid_city(&GridCity { lines: 8, stops_per_line: 12, ..GridCity::default() });
    let spec = GridSpec::covering(feed.stops.iter().map(|s| GeoPoint::new(s.lat, s.lon)), cell)?;
    let map = grid_frequency(&feed, &["WKDY"], spec, TimeWindow::new(start, end)?)?;

    println!("{}x{} grid, {} occupied cells, {} visits", spec.n_rows, spec.n_cols, map.cells.len(), map.total_visits());
    print!("{}", map_csv(&map).lines().take(6).collect::<Vec<_>>().join("\n"));
    println!();
    if let Some(out) = args.get(2) {
        std::fs::write(out, map_geojson(&map))?;
    }
    Ok(())
}
