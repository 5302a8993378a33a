//! Compare two service levels cell by cell. Here the "after" feed runs
//! every trip twice, so every occupied cell gains.
//!
//!     cargo run --example grid_diff

use gtfs2stn_core::analysis::{diff_csv, grid_diff, grid_frequency, GridSpec, TimeWindow};
use gtfs2stn_core::geo::GeoPoint;
use gtfs2stn_core::synth::{doubled_service, grid_city, hms, GridCity};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let before = grid_city(&GridCity { lines: 6, stops_per_line: 10, ..GridCity::default() });
    let after = doubled_service(&before);
    let spec = GridSpec::covering(before.stops.iter().map(|s| GeoPoint::new(s.lat, s.lon)), 0.01)?;
    let window = TimeWindow::new(hms(7, 0, 0), hms(9, 0, 0))?;

    let a = grid_frequency(&before, &["WKDY"], spec, window)?.with_label("before");
    let b = grid_frequency(&after, &["WKDY"], spec, window)?.with_label("after");
    let diff = grid_diff(&a, &b)?;
    println!("largest change: {} visits/stop/hour", diff.max_abs());
    print!("{}", diff_csv(&diff));
    Ok(())
}
