//! Reverse ("arrive by") isochrone to several destinations at once: for
//! every stop, the latest departure that still reaches one of them.
//!
//!     cargo run --example multi_destination

use gtfs2stn_core::gtfs::time::format_time;
use gtfs2stn_core::network::{build_network, BuildConfig};
use gtfs2stn_core::router::{isochrone, isochrone_table, HyperNode, IsochroneQuery, QueryEndpoint};
use gtfs2stn_core::synth::{hms, three_route_feed};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = build_network(&three_route_feed(), &BuildConfig::new(["WKDY"]))?;
    let dests: Vec<QueryEndpoint> = ["S6", "S9"].iter().map(|s| s.parse().unwrap()).collect();
    let deadline = hms(9, 20, 0);

    let q = IsochroneQuery::new(HyperNode::destination(dests, deadline), 90 * 60);
    let result = isochrone(&net, &q)?;
    for st in &result.stop_times {
        println!("{:<4} leave by {}  ({} min)", st.stop_id, format_time(st.label_s), st.travel_time_s / 60);
    }
    print!("{}", isochrone_table(&result));
    Ok(())
}
