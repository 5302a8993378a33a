//! Reference answers computed without the router.
//!
//! Each oracle works straight off the network tables (nodes and links) and
//! shares no code with the search.
#![allow(dead_code)]

use gtfs2stn_core::network::{LinkKind, Network};

fn order_by_time(net: &Network) -> Vec<usize> {
    let mut order: Vec<usize> = (0..net.nodes().len()).collect();
    order.sort_by_key(|&n| (net.nodes()[n].time_s, n));
    order
}

fn outgoing(net: &Network) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); net.nodes().len()];
    for (i, l) in net.links().iter().enumerate() {
        out[l.from as usize].push(i);
    }
    out
}

/// Earliest arrival per stop leaving `origin` at `t`, by dynamic
/// programming over nodes in time order (the graph is acyclic in time).
pub fn dag_earliest_arrival(net: &Network, origin: u32, t: u32) -> Vec<Option<u32>> {
    let nodes = net.nodes();
    let out = outgoing(net);
    let mut reach = vec![false; nodes.len()];
    for (n, node) in nodes.iter().enumerate() {
        if node.stop == origin && node.time_s >= t {
            reach[n] = true;
        }
    }
    let mut best: Vec<Option<u32>> = vec![None; net.stops().len()];
    let mut improve = |s: u32, v: u32| {
        let b = &mut best[s as usize];
        if b.is_none_or(|x| v < x) {
            *b = Some(v);
        }
    };
    improve(origin, t);
    for n in order_by_time(net) {
        if !reach[n] {
            continue;
        }
        for &li in &out[n] {
            let l = &net.links()[li];
            let to = &nodes[l.to as usize];
            reach[l.to as usize] = true;
            match l.kind {
                LinkKind::Waiting => {}
                LinkKind::Transit => improve(to.stop, to.time_s),
                LinkKind::Walking => improve(to.stop, nodes[n].time_s + l.walk_s),
            }
        }
    }
    best
}

/// Latest departure per stop that still reaches `dest` by `deadline`,
/// as the latest event at each stop from which the destination can be
/// reached. Computed backwards in time.
pub fn dag_latest_departure(net: &Network, dest: u32, deadline: u32) -> Vec<Option<u32>> {
    let nodes = net.nodes();
    let out = outgoing(net);
    let mut can = vec![false; nodes.len()];
    let mut order = order_by_time(net);
    order.reverse();
    for n in order {
        let node = nodes[n];
        let mut ok = node.stop == dest && node.time_s <= deadline;
        for &li in &out[n] {
            let l = &net.links()[li];
            let to = nodes[l.to as usize];
            ok |= can[l.to as usize];
            ok |= l.kind == LinkKind::Walking && to.stop == dest && node.time_s + l.walk_s <= deadline;
        }
        can[n] = ok;
    }
    let mut best: Vec<Option<u32>> = vec![None; net.stops().len()];
    best[dest as usize] = Some(deadline);
    for (n, node) in nodes.iter().enumerate() {
        if can[n] {
            let b = &mut best[node.stop as usize];
            if b.is_none_or(|x| node.time_s > x) {
                *b = Some(node.time_s);
            }
        }
    }
    best
}

/// Earliest arrival per stop by walking every node path from the first
/// event at `origin` at or after `t`. Exponential; small networks only.
pub fn enumerate_earliest(net: &Network, origin: u32, t: u32, max_paths: usize) -> Vec<Option<u32>> {
    let nodes = net.nodes();
    let out = outgoing(net);
    let mut best: Vec<Option<u32>> = vec![None; net.stops().len()];
    best[origin as usize] = Some(t);
    let Some(start) =
        (0..nodes.len()).filter(|&n| nodes[n].stop == origin && nodes[n].time_s >= t).min_by_key(|&n| nodes[n].time_s)
    else {
        return best;
    };
    let mut stack = vec![start];
    let mut paths = 0usize;
    while let Some(n) = stack.pop() {
        paths += 1;
        assert!(paths <= max_paths, "path enumeration exceeded {max_paths} paths");
        for &li in &out[n] {
            let l = &net.links()[li];
            let to = nodes[l.to as usize];
            let arrive = match l.kind {
                LinkKind::Waiting => None,
                LinkKind::Transit => Some(to.time_s),
                LinkKind::Walking => Some(nodes[n].time_s + l.walk_s),
            };
            if let Some(a) = arrive {
                let b = &mut best[to.stop as usize];
                if b.is_none_or(|x| a < x) {
                    *b = Some(a);
                }
            }
            stack.push(l.to as usize);
        }
    }
    best
}

/// Great-circle distance via the unit-vector cross product, independent
/// of the haversine form used by the library.
pub fn great_circle_m(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let v = |lat: f64, lon: f64| {
        let (la, lo) = (lat.to_radians(), lon.to_radians());
        [la.cos() * lo.cos(), la.cos() * lo.sin(), la.sin()]
    };
    let (a, b) = (v(lat1, lon1), v(lat2, lon2));
    let cross = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
    let sin = (cross[0].powi(2) + cross[1].powi(2) + cross[2].powi(2)).sqrt();
    let cos = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    6_371_000.0 * sin.atan2(cos)
}
