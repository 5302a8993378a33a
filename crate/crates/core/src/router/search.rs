use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::{Direction, HyperNode, QueryEndpoint, RouteError};
use crate::network::{LinkId, LinkKind, Network, NodeId};

/// A stop attached to the hyper node, with the access (forward) or egress
/// (reverse) walk from its endpoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Seed {
    /// Index into the query's endpoints.
    pub endpoint: usize,
    pub stop: u32,
    pub access_walk_s: u32,
    /// Forward: when the stop is reached. Reverse: when it must be left.
    pub ready_s: u32,
    /// First node boarded (forward) or last node usable (reverse).
    pub node: Option<NodeId>,
}

/// How a stop or node was labelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Via {
    Seed(u32),
    /// Forward: the incoming link. Reverse: the outgoing link.
    Link(LinkId),
    /// Reverse only: a walking link that ends the journey on foot at a
    /// destination stop, ahead of that stop's next event.
    FinalWalk(LinkId),
}

/// Result of one search: a time label per stop and enough predecessor
/// information to rebuild a journey.
#[derive(Debug, Clone)]
pub struct ArrivalLabels {
    direction: Direction,
    anchor_s: u32,
    budget_s: Option<u32>,
    seeds: Vec<Seed>,
    stop_label: Vec<Option<u32>>,
    stop_via: Vec<Option<Via>>,
    node_via: Vec<Option<Via>>,
}

impl ArrivalLabels {
    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn anchor_s(&self) -> u32 {
        self.anchor_s
    }

    pub fn budget_s(&self) -> Option<u32> {
        self.budget_s
    }

    pub fn seeds(&self) -> &[Seed] {
        &self.seeds
    }

    /// Earliest arrival (forward) or latest departure (reverse) at `stop`.
    pub fn label(&self, stop: u32) -> Option<u32> {
        self.stop_label[stop as usize]
    }

    pub fn labels(&self) -> &[Option<u32>] {
        &self.stop_label
    }

    /// Seconds between the anchor and the label.
    pub fn travel_time(&self, stop: u32) -> Option<u32> {
        self.label(stop).map(|t| t.abs_diff(self.anchor_s))
    }

    pub fn stop_via(&self, stop: u32) -> Option<Via> {
        self.stop_via[stop as usize]
    }

    pub fn node_via(&self, node: NodeId) -> Option<Via> {
        self.node_via[node as usize]
    }

    pub fn reached(&self, node: NodeId) -> bool {
        self.node_via[node as usize].is_some()
    }

    pub fn reached_stops(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.stop_label.iter().enumerate().filter_map(|(s, l)| l.map(|t| (s as u32, t)))
    }
}

/// Links of the journey behind a stop label, in travel order, together
/// with the seed it starts (forward) or ends (reverse) at.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    pub seed: usize,
    pub links: Vec<LinkId>,
}

/// Earliest arrival at every stop when leaving any of `origins` at `depart_s`.
pub fn earliest_arrival(net: &Network, origins: &[QueryEndpoint], depart_s: u32) -> Result<ArrivalLabels, RouteError> {
    search(net, &HyperNode::origin(origins.iter().cloned(), depart_s), None)
}

/// Latest departure from every stop that still reaches one of
/// `destinations` by `arrive_by_s`.
pub fn latest_departure(
    net: &Network,
    destinations: &[QueryEndpoint],
    arrive_by_s: u32,
) -> Result<ArrivalLabels, RouteError> {
    search(net, &HyperNode::destination(destinations.iter().cloned(), arrive_by_s), None)
}

/// Runs the search for `hyper`. With a `budget_s`, labels further than that
/// from the anchor are dropped and the search stops expanding there.
pub fn search(net: &Network, hyper: &HyperNode, budget_s: Option<u32>) -> Result<ArrivalLabels, RouteError> {
    if hyper.endpoints.is_empty() {
        return Err(RouteError::NoEndpoints);
    }
    let seeds = resolve_seeds(net, hyper)?;
    let mut labels = ArrivalLabels {
        direction: hyper.direction,
        anchor_s: hyper.anchor_s,
        budget_s,
        seeds,
        stop_label: vec![None; net.stops().len()],
        stop_via: vec![None; net.stops().len()],
        node_via: vec![None; net.nodes().len()],
    };
    match hyper.direction {
        Direction::Forward => forward(net, &mut labels),
        Direction::Reverse => reverse(net, &mut labels),
    }
    Ok(labels)
}

fn resolve_seeds(net: &Network, hyper: &HyperNode) -> Result<Vec<Seed>, RouteError> {
    let cfg = net.config();
    let mut seeds = Vec::new();
    for (endpoint, ep) in hyper.endpoints.iter().enumerate() {
        let stops: Vec<(u32, u32)> = match ep {
            QueryEndpoint::Stop(id) => {
                vec![(net.stop_index_of(id).ok_or_else(|| RouteError::NoSuchStop(id.clone()))?, 0)]
            }
            QueryEndpoint::Coord(p) => {
                if !p.is_valid() {
                    return Err(RouteError::BadCoordinate(p.lat, p.lon));
                }
                net.stops_near(*p, cfg.max_walk_m).into_iter().map(|(s, d)| (s, cfg.walk_time_s(d))).collect()
            }
        };
        for (stop, walk) in stops {
            let ready_s = match hyper.direction {
                Direction::Forward => hyper.anchor_s.checked_add(walk),
                Direction::Reverse => hyper.anchor_s.checked_sub(walk),
            };
            let Some(ready_s) = ready_s else { continue };
            let node = match hyper.direction {
                Direction::Forward => net.first_node_at_or_after(stop, ready_s),
                Direction::Reverse => net.last_node_at_or_before(stop, ready_s),
            };
            seeds.push(Seed { endpoint, stop, access_walk_s: walk, ready_s, node });
        }
    }
    if seeds.iter().all(|s| net.stop_nodes(s.stop).is_empty()) {
        return Err(match hyper.direction {
            Direction::Forward => RouteError::OriginIsolated,
            Direction::Reverse => RouteError::DestinationIsolated,
        });
    }
    Ok(seeds)
}

fn forward(net: &Network, lab: &mut ArrivalLabels) {
    let limit = lab.budget_s.map_or(u32::MAX, |b| lab.anchor_s.saturating_add(b));
    let mut heap: BinaryHeap<Reverse<(u32, NodeId)>> = BinaryHeap::new();
    for (i, seed) in lab.seeds.iter().enumerate() {
        if seed.ready_s > limit {
            continue;
        }
        let s = seed.stop as usize;
        if lab.stop_label[s].is_none_or(|t| seed.ready_s < t) {
            lab.stop_label[s] = Some(seed.ready_s);
            lab.stop_via[s] = Some(Via::Seed(i as u32));
        }
        if let Some(n) = seed.node.filter(|&n| net.time_of(n) <= limit) {
            let better = match lab.node_via[n as usize] {
                Some(Via::Seed(j)) => seed.ready_s < lab.seeds[j as usize].ready_s,
                _ => true,
            };
            if better {
                if lab.node_via[n as usize].is_none() {
                    heap.push(Reverse((net.time_of(n), n)));
                }
                lab.node_via[n as usize] = Some(Via::Seed(i as u32));
            }
        }
    }
    while let Some(Reverse((tu, u))) = heap.pop() {
        for id in net.out_links(u) {
            let l = net.link(id);
            let tv = net.time_of(l.to);
            let arrival = match l.kind {
                LinkKind::Waiting => None,
                LinkKind::Transit => Some(tv),
                LinkKind::Walking => Some(tu + l.walk_s),
            };
            if let Some(a) = arrival.filter(|&a| a <= limit) {
                let s = net.stop_of(l.to) as usize;
                if lab.stop_label[s].is_none_or(|t| a < t) {
                    lab.stop_label[s] = Some(a);
                    lab.stop_via[s] = Some(Via::Link(id));
                }
            }
            if tv <= limit && lab.node_via[l.to as usize].is_none() {
                lab.node_via[l.to as usize] = Some(Via::Link(id));
                heap.push(Reverse((tv, l.to)));
            }
        }
    }
}

fn reverse(net: &Network, lab: &mut ArrivalLabels) {
    let limit = lab.budget_s.map_or(0, |b| lab.anchor_s.saturating_sub(b));
    let mut heap: BinaryHeap<(u32, Reverse<NodeId>)> = BinaryHeap::new();
    for (i, seed) in lab.seeds.iter().enumerate() {
        if seed.ready_s < limit {
            continue;
        }
        let s = seed.stop as usize;
        if lab.stop_label[s].is_none_or(|t| seed.ready_s > t) {
            lab.stop_label[s] = Some(seed.ready_s);
            lab.stop_via[s] = Some(Via::Seed(i as u32));
        }
        if let Some(n) = seed.node.filter(|&n| net.time_of(n) >= limit) {
            let better = match lab.node_via[n as usize] {
                Some(Via::Seed(j)) => seed.ready_s > lab.seeds[j as usize].ready_s,
                _ => true,
            };
            if better {
                if lab.node_via[n as usize].is_none() {
                    heap.push((net.time_of(n), Reverse(n)));
                }
                lab.node_via[n as usize] = Some(Via::Seed(i as u32));
            }
        }
    }
    // Walking links into a destination stop whose target event comes after
    // the deadline still count: the traveller is already there on foot.
    for i in 0..lab.seeds.len() {
        let (stop, ready) = (lab.seeds[i].stop, lab.seeds[i].ready_s);
        let Some(next) = net.first_node_at_or_after(stop, ready.saturating_add(1)) else { continue };
        for &id in net.in_links(next) {
            let l = net.link(id);
            let tu = net.time_of(l.from);
            if l.kind == LinkKind::Walking && tu + l.walk_s <= ready && tu >= limit {
                relax_reverse(net, lab, &mut heap, id, Via::FinalWalk(id));
            }
        }
    }
    while let Some((_, Reverse(v))) = heap.pop() {
        for &id in net.in_links(v) {
            if net.time_of(net.link(id).from) >= limit {
                relax_reverse(net, lab, &mut heap, id, Via::Link(id));
            }
        }
    }
}

fn relax_reverse(
    net: &Network,
    lab: &mut ArrivalLabels,
    heap: &mut BinaryHeap<(u32, Reverse<NodeId>)>,
    id: LinkId,
    via: Via,
) {
    let l = net.link(id);
    let tu = net.time_of(l.from);
    if l.kind != LinkKind::Waiting {
        let s = net.stop_of(l.from) as usize;
        if lab.stop_label[s].is_none_or(|t| tu > t) {
            lab.stop_label[s] = Some(tu);
            lab.stop_via[s] = Some(via);
        }
    }
    if lab.node_via[l.from as usize].is_none() {
        lab.node_via[l.from as usize] = Some(via);
        heap.push((tu, Reverse(l.from)));
    }
}

/// Rebuilds the journey behind the label of `stop_id`.
pub fn reconstruct_path(net: &Network, labels: &ArrivalLabels, stop_id: &str) -> Result<Path, RouteError> {
    let stop = net.stop_index_of(stop_id).ok_or_else(|| RouteError::NoSuchStop(stop_id.to_string()))?;
    let via = labels.stop_via(stop).ok_or_else(|| RouteError::Unreached(stop_id.to_string()))?;
    let mut links = Vec::new();
    let seed = match labels.direction {
        Direction::Forward => {
            let mut via = via;
            loop {
                match via {
                    Via::Seed(i) => break i as usize,
                    Via::Link(id) => {
                        links.push(id);
                        via = labels.node_via(net.link(id).from).expect("predecessor of a reached node is reached");
                    }
                    Via::FinalWalk(_) => unreachable!("forward search never records final walks"),
                }
            }
        }
        Direction::Reverse => {
            let mut via = via;
            loop {
                match via {
                    Via::Seed(i) => break i as usize,
                    Via::Link(id) => {
                        links.push(id);
                        via = labels.node_via(net.link(id).to).expect("successor of a reached node is reached");
                    }
                    Via::FinalWalk(id) => {
                        links.push(id);
                        let l = net.link(id);
                        let (end_stop, arrive) = (net.stop_of(l.to), net.time_of(l.from) + l.walk_s);
                        break labels
                            .seeds
                            .iter()
                            .position(|s| s.stop == end_stop && arrive <= s.ready_s)
                            .expect("final walk ends at a seed stop");
                    }
                }
            }
        }
    };
    if labels.direction == Direction::Forward {
        links.reverse();
    }
    Ok(Path { seed, links })
}
