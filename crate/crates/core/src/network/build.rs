use std::borrow::Cow;
use std::collections::{HashMap, HashSet};

use rayon::prelude::*;

use super::*;
use crate::geo::walk_pairs;
use crate::gtfs::{expand_frequencies, trips_for_services, validate, Feed};

/// Compiles `feed` into a network for the services in `cfg`.
///
/// Frequency-based trips are expanded first. Nodes are the distinct
/// `(stop, time)` pairs among the selected trips' arrivals and departures.
pub fn build_network(feed: &Feed, cfg: &BuildConfig) -> Result<Network, NetworkError> {
    cfg.check()?;
    let report = validate(feed);
    if report.has_fatal() {
        return Err(NetworkError::InvalidFeed(report.fatal_count()));
    }
    let feed: Cow<'_, Feed> = match &feed.frequencies {
        Some(f) if !f.is_empty() => Cow::Owned(expand_frequencies(feed)?),
        _ => Cow::Borrowed(feed),
    };
    let services: Vec<&str> = cfg.service_ids.iter().map(String::as_str).collect();
    let selected: HashSet<&str> = trips_for_services(&feed, &services)?.into_iter().collect();
    if selected.is_empty() {
        return Err(NetworkError::EmptySelection);
    }

    let mut stop_lookup: HashMap<&str, u32> = HashMap::with_capacity(feed.stops.len());
    for (i, s) in feed.stops.iter().enumerate() {
        stop_lookup.entry(s.stop_id.as_str()).or_insert(i as u32);
    }
    let stops: Vec<NetStop> = feed
        .stops
        .iter()
        .map(|s| NetStop { stop_id: s.stop_id.clone(), name: s.name.clone(), point: GeoPoint::new(s.lat, s.lon) })
        .collect();

    // (from_stop, dep, to_stop, arr, trip)
    let mut hops: Vec<(u32, u32, u32, u32, u32)> = Vec::new();
    let mut events: Vec<(u32, u32)> = Vec::new();
    let mut trips: Vec<String> = Vec::new();
    for calls in feed.stop_times_by_trip() {
        if !selected.contains(calls[0].trip_id.as_str()) {
            continue;
        }
        let trip = trips.len() as u32;
        trips.push(calls[0].trip_id.clone());
        for st in calls {
            let stop = stop_lookup[st.stop_id.as_str()];
            events.push((stop, st.arrival_s));
            events.push((stop, st.departure_s));
        }
        for w in calls.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let (sa, sb) = (stop_lookup[a.stop_id.as_str()], stop_lookup[b.stop_id.as_str()]);
            if sa != sb && a.departure_s <= b.arrival_s {
                hops.push((sa, a.departure_s, sb, b.arrival_s, trip));
            }
        }
    }
    events.sort_unstable();
    events.dedup();
    let nodes: Vec<EventNode> = events.iter().map(|&(stop, time_s)| EventNode { stop, time_s }).collect();

    let mut stop_offsets = vec![0usize; stops.len() + 1];
    for n in &nodes {
        stop_offsets[n.stop as usize + 1] += 1;
    }
    for i in 0..stops.len() {
        stop_offsets[i + 1] += stop_offsets[i];
    }
    let node_at = |stop: u32, t: u32| -> NodeId {
        let base = stop_offsets[stop as usize];
        let slice = &nodes[base..stop_offsets[stop as usize + 1]];
        (base + slice.partition_point(|n| n.time_s < t)) as NodeId
    };

    let mut links: Vec<Link> = hops
        .iter()
        .map(|&(sa, dep, sb, arr, trip)| Link {
            from: node_at(sa, dep),
            to: node_at(sb, arr),
            kind: LinkKind::Transit,
            duration_s: arr - dep,
            walk_s: 0,
            trip: Some(trip),
        })
        .collect();

    for s in 0..stops.len() {
        for id in stop_offsets[s] + 1..stop_offsets[s + 1] {
            links.push(Link {
                from: (id - 1) as NodeId,
                to: id as NodeId,
                kind: LinkKind::Waiting,
                duration_s: nodes[id].time_s - nodes[id - 1].time_s,
                walk_s: 0,
                trip: None,
            });
        }
    }

    // Walking pairs only among stops that have events.
    let served: Vec<u32> =
        (0..stops.len() as u32).filter(|&s| stop_offsets[s as usize + 1] > stop_offsets[s as usize]).collect();
    let served_points: Vec<GeoPoint> = served.iter().map(|&s| stops[s as usize].point).collect();
    let index = SpatialIndex::for_radius(&served_points, cfg.max_walk_m);
    let pairs = walk_pairs(&served_points, &index, cfg.max_walk_m);
    let walking: Vec<Link> = pairs
        .par_iter()
        .flat_map_iter(|&(a, b, meters)| {
            let (a, b) = (served[a as usize] as usize, served[b as usize] as usize);
            let walk_s = cfg.walk_time_s(meters);
            let (nodes, stop_offsets) = (&nodes, &stop_offsets);
            [(a, b), (b, a)].into_iter().flat_map(move |(from, to)| {
                let targets = &nodes[stop_offsets[to]..stop_offsets[to + 1]];
                (stop_offsets[from]..stop_offsets[from + 1]).filter_map(move |u| {
                    let ready = nodes[u].time_s.checked_add(walk_s)?;
                    let k = targets.partition_point(|n| n.time_s < ready);
                    let v = targets.get(k)?;
                    (v.time_s < cfg.day_horizon_s).then(|| Link {
                        from: u as NodeId,
                        to: (stop_offsets[to] + k) as NodeId,
                        kind: LinkKind::Walking,
                        duration_s: v.time_s - nodes[u].time_s,
                        walk_s,
                        trip: None,
                    })
                })
            })
        })
        .collect();
    links.extend(walking);

    Network::from_parts(cfg.clone(), stops, nodes, trips, links)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    #[test]
    fn single_trip_counts() {
        let feed = synth::single_trip_feed();
        let net = build_network(&feed, &BuildConfig::new(["WKDY"])).unwrap();
        let s = net.stats();
        assert_eq!((s.nodes, s.transit_links, s.waiting_links, s.walking_links), (6, 2, 3, 0));
    }

    #[test]
    fn rejects_bad_config_and_selection() {
        let feed = synth::single_trip_feed();
        let cfg = BuildConfig::new(["WKDY"]).with_walk(0.0, 1.34);
        assert!(matches!(build_network(&feed, &cfg), Err(NetworkError::InvalidConfig(_))));
        assert!(matches!(
            build_network(&feed, &BuildConfig::new(["NOPE"])),
            Err(NetworkError::Gtfs(GtfsError::UnknownServiceId(_)))
        ));
        assert!(matches!(build_network(&feed, &BuildConfig::new(["SAT"])), Err(NetworkError::EmptySelection)));
    }

    #[test]
    fn refuses_fatal_feed() {
        let mut feed = synth::single_trip_feed();
        feed.stop_times[0].trip_id = "X".into();
        assert!(matches!(build_network(&feed, &BuildConfig::new(["WKDY"])), Err(NetworkError::InvalidFeed(1))));
    }
}
