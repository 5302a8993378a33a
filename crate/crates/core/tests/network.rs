#[path = "support/oracle.rs"]
mod oracle;

use std::collections::{BTreeSet, HashSet};
use std::path::PathBuf;

use gtfs2stn_core::gtfs::{expand_frequencies, load_feed, Feed};
use gtfs2stn_core::network::*;
use gtfs2stn_core::synth::{self, GridCity};

fn medium_grid() -> Feed {
    synth::grid_city(&GridCity { lines: 6, stops_per_line: 10, trips_per_line: 8, ..GridCity::default() })
}

/// Distinct `(stop_id, time)` events straight from the timetable.
fn timetable_events(feed: &Feed, services: &[&str]) -> BTreeSet<(String, u32)> {
    let trips: HashSet<&str> =
        feed.trips.iter().filter(|t| services.contains(&t.service_id.as_str())).map(|t| t.trip_id.as_str()).collect();
    feed.stop_times
        .iter()
        .filter(|s| trips.contains(s.trip_id.as_str()))
        .flat_map(|s| [(s.stop_id.clone(), s.arrival_s), (s.stop_id.clone(), s.departure_s)])
        .collect()
}

fn check_structure(net: &Network, feed: &Feed, services: &[&str]) {
    let nodes: BTreeSet<(String, u32)> =
        net.nodes().iter().map(|n| (net.stops()[n.stop as usize].stop_id.clone(), n.time_s)).collect();
    assert_eq!(nodes.len(), net.nodes().len(), "nodes are distinct");
    assert_eq!(nodes, timetable_events(feed, services));

    let cfg = net.config();
    for l in net.links() {
        let (a, b) = (net.node(l.from), net.node(l.to));
        assert!(a.time_s <= b.time_s, "link goes back in time");
        assert_eq!(l.duration_s, b.time_s - a.time_s);
        match l.kind {
            LinkKind::Waiting => {
                assert_eq!(a.stop, b.stop);
                assert_eq!(l.to, l.from + 1, "waiting links join consecutive events");
            }
            LinkKind::Transit => assert!(l.trip.is_some() && a.stop != b.stop),
            LinkKind::Walking => {
                let (pa, pb) = (net.stops()[a.stop as usize].point, net.stops()[b.stop as usize].point);
                let d = oracle::great_circle_m(pa.lat, pa.lon, pb.lat, pb.lon);
                assert!(d <= cfg.max_walk_m + 1e-6);
                let expect = d / cfg.walk_speed_mps;
                assert!(f64::from(l.walk_s) >= expect - 1e-6 && f64::from(l.walk_s) < expect + 1.0);
                let ready = a.time_s + l.walk_s;
                assert!(b.time_s >= ready);
                let earlier = net.stop_nodes(b.stop).filter(|&n| net.time_of(n) >= ready && n < l.to).count();
                assert_eq!(earlier, 0, "walking link skips an earlier event");
            }
        }
    }
    let per_stop_waits: usize = (0..net.stops().len() as u32).map(|s| net.stop_nodes(s).len().saturating_sub(1)).sum();
    assert_eq!(net.stats().waiting_links, per_stop_waits);
}

#[test]
fn grid_network_structure() {
    let feed = medium_grid();
    let net = build_network(&feed, &BuildConfig::new(["WKDY"])).unwrap();
    check_structure(&net, &feed, &["WKDY"]);
    assert!(net.stats().walking_links > 0);
}

#[test]
fn every_walkable_pair_gets_links() {
    let feed = medium_grid();
    let net = build_network(&feed, &BuildConfig::new(["WKDY"])).unwrap();
    let cfg = net.config();
    let walking: HashSet<(u32, u32)> = net
        .links()
        .iter()
        .filter(|l| l.kind == LinkKind::Walking)
        .map(|l| (net.stop_of(l.from), net.stop_of(l.to)))
        .collect();
    let stops = net.stops();
    for a in 0..stops.len() {
        for b in 0..stops.len() {
            let (pa, pb) = (stops[a].point, stops[b].point);
            let d = oracle::great_circle_m(pa.lat, pa.lon, pb.lat, pb.lon);
            // Leave a margin so rounding at the radius cannot flip the answer.
            if a != b && d < cfg.max_walk_m - 0.01 {
                assert!(walking.contains(&(a as u32, b as u32)), "{} -> {}", stops[a].stop_id, stops[b].stop_id);
            }
            if d > cfg.max_walk_m + 0.01 {
                assert!(!walking.contains(&(a as u32, b as u32)));
            }
        }
    }
}

#[test]
fn frequency_fixture_builds_expanded_events() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/frequency-loop");
    let feed = load_feed(dir).unwrap();
    let net = build_network(&feed, &BuildConfig::new(["DAILY", "FRI"])).unwrap();
    check_structure(&net, &expand_frequencies(&feed).unwrap(), &["DAILY", "FRI"]);
    // MUS and MUS_B are across the street from each other.
    let (mus, mus_b) = (net.stop_index_of("MUS").unwrap(), net.stop_index_of("MUS_B").unwrap());
    assert!(net
        .links()
        .iter()
        .any(|l| l.kind == LinkKind::Walking && net.stop_of(l.from) == mus && net.stop_of(l.to) == mus_b));
}

#[test]
fn codec_round_trips_a_larger_network() {
    let net = build_network(&medium_grid(), &BuildConfig::new(["WKDY"])).unwrap();
    let bytes = serialize_network(&net);
    assert_eq!(&bytes[..4], MAGIC);
    assert_eq!(bytes[4], FORMAT_VERSION);
    let back = deserialize_network(&bytes).unwrap();
    assert_eq!(back, net);
    for n in [0, 17, net.nodes().len() as u32 - 1] {
        assert_eq!(back.out_links(n), net.out_links(n));
        assert_eq!(back.in_links(n), net.in_links(n));
    }
}

#[test]
fn geojson_layers_cover_the_network() {
    let net = build_network(&synth::single_trip_feed(), &BuildConfig::new(["WKDY"])).unwrap();
    let nodes = nodes_geojson(&net);
    let links = links_geojson(&net);
    assert_eq!(nodes["features"].as_array().unwrap().len(), 6);
    let feats = links["features"].as_array().unwrap();
    assert_eq!(feats.len(), 5);
    let transit: Vec<_> = feats.iter().filter(|f| f["properties"]["kind"] == "transit").collect();
    assert_eq!(transit.len(), 2);
    assert!(transit.iter().all(|f| f["properties"]["trip_id"] == "T1"));
}

#[test]
fn wider_walk_radius_adds_links() {
    let feed = synth::three_route_feed();
    let narrow = build_network(&feed, &BuildConfig::new(["WKDY"])).unwrap();
    let wide = build_network(&feed, &BuildConfig::new(["WKDY"]).with_walk(1000.0, 1.34)).unwrap();
    assert!(wide.stats().walking_links > narrow.stats().walking_links);
    assert_eq!(wide.stats().transit_links, narrow.stats().transit_links);
}
