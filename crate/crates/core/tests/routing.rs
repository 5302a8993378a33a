#[path = "support/oracle.rs"]
mod oracle;

use gtfs2stn_core::geo::GeoPoint;
use gtfs2stn_core::network::{build_network, BuildConfig, LinkKind, Network};
use gtfs2stn_core::router::*;
use gtfs2stn_core::synth::{self, hms, GridCity};
use proptest::prelude::*;

fn stop(id: &str) -> QueryEndpoint {
    QueryEndpoint::Stop(id.into())
}

fn three(service: &str) -> Network {
    build_network(&synth::three_route_feed(), &BuildConfig::new([service])).unwrap()
}

fn small_grid() -> Network {
    let p = GridCity { lines: 5, stops_per_line: 8, trips_per_line: 10, headway_s: 600, ..GridCity::default() };
    build_network(&synth::grid_city(&p), &BuildConfig::new(["WKDY"])).unwrap()
}

fn anchors() -> Vec<u32> {
    (0..16).map(|k| hms(4, 50, 0) + k * 300).collect()
}

#[test]
fn earliest_arrival_matches_dag_oracle() {
    for net in [three("WKDY"), three("SAT"), small_grid()] {
        assert!(net.nodes().len() <= 500, "oracle network too large: {}", net.nodes().len());
        let mut anchors = anchors();
        anchors.extend((0..16).map(|k| hms(7, 50, 0) + k * 900));
        for o in 0..net.stops().len() as u32 {
            let id = net.stops()[o as usize].stop_id.clone();
            for &t in &anchors {
                let lab = earliest_arrival(&net, &[stop(&id)], t).unwrap();
                assert_eq!(lab.labels(), oracle::dag_earliest_arrival(&net, o, t).as_slice(), "origin {id} at {t}");
            }
        }
    }
}

#[test]
fn earliest_arrival_matches_path_enumeration() {
    let net = three("WKDY");
    assert!(net.nodes().len() <= 200);
    for o in 0..net.stops().len() as u32 {
        let id = net.stops()[o as usize].stop_id.clone();
        for t in (hms(7, 45, 0)..=hms(9, 30, 0)).step_by(300) {
            let lab = earliest_arrival(&net, &[stop(&id)], t).unwrap();
            assert_eq!(lab.labels(), oracle::enumerate_earliest(&net, o, t, 1_000_000).as_slice(), "{id}@{t}");
        }
    }
}

#[test]
fn forced_transfer_far_stop() {
    let net = three("WKDY");
    let lab = earliest_arrival(&net, &[stop("S1")], hms(8, 0, 0)).unwrap();
    // R1 arrives S3 08:20, walk to S4, R2 08:25:30 reaches S6 at 08:45.
    let s6 = net.stop_index_of("S6").unwrap();
    assert_eq!(lab.label(s6), Some(hms(8, 20, 0) + (hms(8, 25, 30) - hms(8, 20, 0)) + 1170));
    let path = reconstruct_path(&net, &lab, "S6").unwrap();
    let kinds: String = path
        .links
        .iter()
        .map(|&l| match net.link(l).kind {
            LinkKind::Waiting => 'w',
            LinkKind::Transit => 't',
            LinkKind::Walking => 'k',
        })
        .collect();
    // Waits at the origin and dwells between rides aside: ride, walk, ride.
    let moves: String = kinds.chars().filter(|&c| c != 'w').fold(String::new(), |mut acc, c| {
        if !acc.ends_with(c) {
            acc.push(c);
        }
        acc
    });
    assert_eq!(moves, "tkt", "{kinds}");
    for w in path.links.windows(2) {
        assert_eq!(net.link(w[0]).to, net.link(w[1]).from, "chain is contiguous");
        assert!(net.time_of(net.link(w[0]).from) <= net.time_of(net.link(w[1]).from));
    }
}

#[test]
fn single_trip_timetable_and_edges() {
    let net = build_network(&synth::single_trip_feed(), &BuildConfig::new(["WKDY"])).unwrap();
    let ids = ["A", "B", "C"];
    let lab = earliest_arrival(&net, &[stop("A")], hms(8, 0, 30)).unwrap();
    let got: Vec<Option<u32>> = ids.iter().map(|s| lab.label(net.stop_index_of(s).unwrap())).collect();
    assert_eq!(got, [Some(hms(8, 0, 30)), Some(hms(8, 10, 0)), Some(hms(8, 20, 0))]);

    let late = earliest_arrival(&net, &[stop("A")], hms(23, 0, 0)).unwrap();
    assert_eq!(late.reached_stops().collect::<Vec<_>>(), [(0, hms(23, 0, 0))]);

    let rev = latest_departure(&net, &[stop("C")], hms(8, 20, 0)).unwrap();
    let got: Vec<Option<u32>> = ids.iter().map(|s| rev.label(net.stop_index_of(s).unwrap())).collect();
    assert_eq!(got, [Some(hms(8, 0, 30)), Some(hms(8, 10, 30)), Some(hms(8, 20, 0))]);

    let early = latest_departure(&net, &[stop("C")], hms(7, 0, 0)).unwrap();
    assert_eq!(early.reached_stops().count(), 1);

    let lab = earliest_arrival(&net, &[stop("B")], hms(8, 0, 0)).unwrap();
    assert!(reconstruct_path(&net, &lab, "B").unwrap().links.is_empty());
    assert_eq!(reconstruct_path(&net, &lab, "A").unwrap_err(), RouteError::Unreached("A".into()));
}

#[test]
fn latest_departure_matches_dag_oracle() {
    for net in [three("WKDY"), small_grid()] {
        for d in 0..net.stops().len() as u32 {
            let id = net.stops()[d as usize].stop_id.clone();
            for t in (hms(5, 0, 0)..=hms(9, 30, 0)).step_by(630) {
                let lab = latest_departure(&net, &[stop(&id)], t).unwrap();
                assert_eq!(lab.labels(), oracle::dag_latest_departure(&net, d, t).as_slice(), "dest {id} by {t}");
            }
        }
    }
}

#[test]
fn forward_reverse_duality() {
    for net in [three("WKDY"), three("SAT"), small_grid()] {
        let n = net.stops().len() as u32;
        for a in 0..n {
            let ida = net.stops()[a as usize].stop_id.clone();
            for t in (hms(4, 55, 0)..=hms(12, 0, 0)).step_by(1500) {
                let fwd = earliest_arrival(&net, &[stop(&ida)], t).unwrap();
                for b in 0..n {
                    let Some(arr) = fwd.label(b) else { continue };
                    let idb = &net.stops()[b as usize].stop_id;
                    let rev = latest_departure(&net, &[stop(idb)], arr).unwrap();
                    assert!(rev.label(a).is_some_and(|d| d >= t), "{ida}@{t} -> {idb}@{arr}");
                }
            }
        }
    }
}

#[test]
fn multi_destination_reverse_is_best_single() {
    let net = three("WKDY");
    let dests = ["S6", "S9", "S2"];
    let deadline = hms(9, 20, 0);
    let all = latest_departure(&net, &dests.map(stop), deadline).unwrap();
    let singles: Vec<_> = dests.iter().map(|d| latest_departure(&net, &[stop(d)], deadline).unwrap()).collect();
    for s in 0..net.stops().len() as u32 {
        let best = singles.iter().filter_map(|l| l.label(s)).max();
        assert_eq!(all.label(s), best, "stop {s}");
    }
    // The same through the isochrone interface, where travel time is the minimum.
    let q = IsochroneQuery::new(HyperNode::destination(dests.map(stop), deadline), 7200);
    let iso = isochrone(&net, &q).unwrap();
    for st in &iso.stop_times {
        let s = net.stop_index_of(&st.stop_id).unwrap();
        let best = singles.iter().filter_map(|l| l.travel_time(s)).min();
        assert_eq!(Some(st.travel_time_s), best);
    }
}

#[test]
fn labels_satisfy_bellman_condition() {
    let net = small_grid();
    for t in anchors() {
        let lab = earliest_arrival(&net, &[stop("L2S3")], t).unwrap();
        for l in net.links() {
            if !lab.reached(l.from) {
                continue;
            }
            let arrive = match l.kind {
                LinkKind::Waiting => continue,
                LinkKind::Transit => net.time_of(l.to),
                LinkKind::Walking => net.time_of(l.from) + l.walk_s,
            };
            let label = lab.label(net.stop_of(l.to)).expect("head of a usable link is labelled");
            assert!(label <= arrive);
        }
    }
}

#[test]
fn coordinate_origin_equals_walk_seeded_stops() {
    let net = three("WKDY");
    let p = GeoPoint::new(36.1609, -86.7792);
    let t = hms(8, 15, 0);
    let lab = earliest_arrival(&net, &[QueryEndpoint::Coord(p)], t).unwrap();
    let cfg = net.config();
    let near: Vec<(u32, f64)> = net
        .stops()
        .iter()
        .enumerate()
        .map(|(i, s)| (i as u32, oracle::great_circle_m(p.lat, p.lon, s.point.lat, s.point.lon)))
        .filter(|&(_, d)| d <= cfg.max_walk_m)
        .collect();
    assert!(near.len() >= 2, "fixture point should be near S3 and S4");
    for s in 0..net.stops().len() as u32 {
        let best = near
            .iter()
            .filter_map(|&(o, d)| {
                let ready = t + (d / cfg.walk_speed_mps).ceil() as u32;
                oracle::dag_earliest_arrival(&net, o, ready)[s as usize]
            })
            .min();
        assert_eq!(lab.label(s), best, "stop {s}");
    }
}

fn decomposition_holds(net: &Network, origin: &QueryEndpoint, dest: &QueryEndpoint, t: u32) -> bool {
    let origins = std::slice::from_ref(origin);
    let Ok(lab) = earliest_arrival(net, origins, t) else { return true };
    let Some(a) = best_arrival(net, &lab, std::slice::from_ref(dest)).unwrap() else { return true };
    let j = journey_breakdown(net, &lab, origins, &a).unwrap();
    let contiguous = j.legs.windows(2).all(|w| w[0].end_s == w[1].start_s);
    let bounds = j.legs.first().is_none_or(|l| l.start_s == t) && j.legs.last().is_none_or(|l| l.end_s == a.time_s);
    j.walk_s + j.wait_s + j.vehicle_s == j.total_s && j.total_s == a.time_s - t && contiguous && bounds
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, ..ProptestConfig::default() })]

    #[test]
    fn decomposition_is_exact(o in 0usize..40, d in 0usize..40, t in hms(4, 30, 0)..hms(9, 0, 0), coord in any::<bool>()) {
        let net = small_grid();
        let pick = |i: usize| {
            let s = &net.stops()[i];
            if coord {
                QueryEndpoint::Coord(GeoPoint::new(s.point.lat + 0.0007, s.point.lon - 0.0005))
            } else {
                QueryEndpoint::Stop(s.stop_id.clone())
            }
        };
        prop_assert!(decomposition_holds(&net, &pick(o), &pick(d), t));
    }

    #[test]
    fn arrival_is_monotone_in_departure(o in 0usize..40, d in 0usize..40, t1 in hms(4, 30, 0)..hms(9, 0, 0), dt in 0u32..3600) {
        let net = small_grid();
        let (a, b) = (net.stops()[o].stop_id.clone(), d as u32);
        let e1 = earliest_arrival(&net, &[stop(&a)], t1).unwrap().label(b);
        let e2 = earliest_arrival(&net, &[stop(&a)], t1 + dt).unwrap().label(b);
        match (e1, e2) {
            (Some(x), Some(y)) => prop_assert!(y >= x),
            (None, Some(_)) => prop_assert!(false, "later departure reached more"),
            _ => {}
        }
    }
}
