//! Compile a feed into a time-expanded network, save it, and read it back.
//!
//!     cargo run --example build_network -- fixtures/three-route WKDY /tmp/three.stn

use gtfs2stn_core::gtfs::load_feed;
use gtfs2stn_core::network::{build_network, deserialize_network, serialize_network, BuildConfig, LinkKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let feed_path = args
        .first()
        .cloned()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/three-route").into());
    let service = args.get(1).map_or("WKDY", String::as_str);

    let feed = load_feed(&feed_path)?;
    let net = build_network(&feed, &BuildConfig::new([service]).with_walk(400.0, 1.34))?;
    let s = net.stats();
    println!("{} stops, {} nodes, {} links", s.stops, s.nodes, s.links);
    println!("  waiting {}  transit {}  walking {}", s.waiting_links, s.transit_links, s.walking_links);

    // Walking transfers, with the walk and the wait for the next event.
    for l in net.links().iter().filter(|l| l.kind == LinkKind::Walking).take(5) {
        let (a, b) = (net.node(l.from), net.node(l.to));
        println!(
            "  walk {} -> {}: {} s on foot, {} s waiting",
            net.stops()[a.stop as usize].stop_id,
            net.stops()[b.stop as usize].stop_id,
            l.walk_s,
            l.duration_s - l.walk_s
        );
    }

    let bytes = serialize_network(&net);
    if let Some(out) = args.get(2) {
        std::fs::write(out, &bytes)?;
        println!("wrote {out} ({} bytes)", bytes.len());
    }
    assert_eq!(deserialize_network(&bytes)?, net);
    Ok(())
}
