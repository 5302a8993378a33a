//! Time-expanded transit network.
//!
//! Every node is a `(stop, time)` event taken from the schedule. Links come
//! in three kinds: waiting at a stop until its next event, riding a trip to
//! the next stop, and walking to a nearby stop's earliest reachable event.
//! Links never go back in time, so ordering nodes by time gives a
//! topological order.

mod build;
mod codec;
mod export;

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::geo::{GeoPoint, SpatialIndex};
use crate::gtfs::GtfsError;

pub use build::build_network;
pub use codec::{deserialize_network, serialize_network, FORMAT_VERSION, MAGIC};
pub use export::{links_geojson, nodes_geojson};

pub type NodeId = u32;
pub type LinkId = u32;

/// A quarter mile.
pub const DEFAULT_MAX_WALK_M: f64 = 402.336;
pub const DEFAULT_WALK_SPEED_MPS: f64 = 1.34;
/// Two service days, so trips running past midnight stay connected.
pub const DEFAULT_DAY_HORIZON_S: u32 = 172_800;

#[derive(Debug, thiserror::Error)]
pub enum NetworkError {
    #[error("invalid build configuration: {0}")]
    InvalidConfig(String),
    #[error("feed has {0} fatal validation errors")]
    InvalidFeed(usize),
    #[error("no trips run on the selected services")]
    EmptySelection,
    #[error(transparent)]
    Gtfs(#[from] GtfsError),
    #[error("network format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u8, expected: u8 },
    #[error("corrupt network stream: {0}")]
    CorruptStream(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildConfig {
    pub service_ids: BTreeSet<String>,
    pub max_walk_m: f64,
    pub walk_speed_mps: f64,
    pub day_horizon_s: u32,
}

impl BuildConfig {
    pub fn new<S: Into<String>>(service_ids: impl IntoIterator<Item = S>) -> Self {
        BuildConfig {
            service_ids: service_ids.into_iter().map(Into::into).collect(),
            max_walk_m: DEFAULT_MAX_WALK_M,
            walk_speed_mps: DEFAULT_WALK_SPEED_MPS,
            day_horizon_s: DEFAULT_DAY_HORIZON_S,
        }
    }

    pub fn with_walk(mut self, max_walk_m: f64, walk_speed_mps: f64) -> Self {
        self.max_walk_m = max_walk_m;
        self.walk_speed_mps = walk_speed_mps;
        self
    }

    pub fn check(&self) -> Result<(), NetworkError> {
        if !(self.max_walk_m > 0.0 && self.max_walk_m.is_finite()) {
            return Err(NetworkError::InvalidConfig(format!("max_walk_m must be > 0, got {}", self.max_walk_m)));
        }
        if !(self.walk_speed_mps > 0.0 && self.walk_speed_mps.is_finite()) {
            return Err(NetworkError::InvalidConfig(format!(
                "walk_speed_mps must be > 0, got {}",
                self.walk_speed_mps
            )));
        }
        if self.service_ids.is_empty() {
            return Err(NetworkError::InvalidConfig("at least one service id is required".into()));
        }
        Ok(())
    }

    /// Whole seconds needed to walk `meters`, rounded up.
    pub fn walk_time_s(&self, meters: f64) -> u32 {
        (meters / self.walk_speed_mps).ceil() as u32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkKind {
    Waiting,
    Transit,
    Walking,
}

impl LinkKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LinkKind::Waiting => "waiting",
            LinkKind::Transit => "transit",
            LinkKind::Walking => "walking",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetStop {
    pub stop_id: String,
    pub name: String,
    pub point: GeoPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventNode {
    pub stop: u32,
    pub time_s: u32,
}

/// `walk_s` is the on-foot part of a Walking link; the rest of its
/// duration is spent waiting at the target stop. Zero for other kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Link {
    pub from: NodeId,
    pub to: NodeId,
    pub kind: LinkKind,
    pub duration_s: u32,
    pub walk_s: u32,
    /// Index into [`Network::trips`]; present only for Transit links.
    pub trip: Option<u32>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkStats {
    pub stops: usize,
    pub nodes: usize,
    pub links: usize,
    pub waiting_links: usize,
    pub transit_links: usize,
    pub walking_links: usize,
}

/// The compiled network. Nodes are sorted by `(stop, time)`; links are
/// sorted by `(from, kind, to, trip)` so a node's outgoing links form one
/// contiguous range. The reverse adjacency is a separate CSR transpose.
#[derive(Debug, Clone)]
pub struct Network {
    config: BuildConfig,
    stops: Vec<NetStop>,
    nodes: Vec<EventNode>,
    trips: Vec<String>,
    links: Vec<Link>,
    stop_offsets: Vec<u32>,
    out_offsets: Vec<u32>,
    in_offsets: Vec<u32>,
    in_links: Vec<LinkId>,
    stop_lookup: HashMap<String, u32>,
    stop_points: Vec<GeoPoint>,
    stop_index: SpatialIndex,
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config
            && self.stops == other.stops
            && self.nodes == other.nodes
            && self.trips == other.trips
            && self.links == other.links
    }
}

impl Network {
    /// Assembles a network from its stored tables, checking every structural
    /// invariant and deriving the adjacency indexes.
    pub fn from_parts(
        config: BuildConfig,
        stops: Vec<NetStop>,
        nodes: Vec<EventNode>,
        trips: Vec<String>,
        mut links: Vec<Link>,
    ) -> Result<Self, NetworkError> {
        let corrupt = |m: String| NetworkError::CorruptStream(m);
        if stops.len() >= u32::MAX as usize || nodes.len() >= u32::MAX as usize || links.len() >= u32::MAX as usize {
            return Err(corrupt("table too large".into()));
        }
        for w in nodes.windows(2) {
            if (w[0].stop, w[0].time_s) >= (w[1].stop, w[1].time_s) {
                return Err(corrupt("nodes not strictly sorted by (stop, time)".into()));
            }
        }
        if let Some(n) = nodes.last() {
            if n.stop as usize >= stops.len() {
                return Err(corrupt(format!("node references stop {} of {}", n.stop, stops.len())));
            }
        }
        for (i, l) in links.iter().enumerate() {
            let (Some(a), Some(b)) = (nodes.get(l.from as usize), nodes.get(l.to as usize)) else {
                return Err(corrupt(format!("link {i} references a missing node")));
            };
            if b.time_s < a.time_s || b.time_s - a.time_s != l.duration_s {
                return Err(corrupt(format!("link {i} duration does not match node times")));
            }
            let same_stop = a.stop == b.stop;
            let ok = match l.kind {
                LinkKind::Waiting => same_stop && l.trip.is_none() && l.walk_s == 0,
                LinkKind::Transit => !same_stop && l.trip.is_some_and(|t| (t as usize) < trips.len()) && l.walk_s == 0,
                LinkKind::Walking => !same_stop && l.trip.is_none() && l.walk_s <= l.duration_s,
            };
            if !ok {
                return Err(corrupt(format!("link {i} is inconsistent with its kind")));
            }
        }
        links.sort_by_key(|l| (l.from, l.kind, l.to, l.trip));

        let mut stop_offsets = vec![0u32; stops.len() + 1];
        for n in &nodes {
            stop_offsets[n.stop as usize + 1] += 1;
        }
        for i in 0..stops.len() {
            stop_offsets[i + 1] += stop_offsets[i];
        }
        let mut out_offsets = vec![0u32; nodes.len() + 1];
        let mut in_offsets = vec![0u32; nodes.len() + 1];
        for l in &links {
            out_offsets[l.from as usize + 1] += 1;
            in_offsets[l.to as usize + 1] += 1;
        }
        for i in 0..nodes.len() {
            out_offsets[i + 1] += out_offsets[i];
            in_offsets[i + 1] += in_offsets[i];
        }
        let mut fill = in_offsets.clone();
        let mut in_links = vec![0; links.len()];
        for (id, l) in links.iter().enumerate() {
            let slot = &mut fill[l.to as usize];
            in_links[*slot as usize] = id as LinkId;
            *slot += 1;
        }

        let mut stop_lookup = HashMap::with_capacity(stops.len());
        for (i, s) in stops.iter().enumerate() {
            stop_lookup.entry(s.stop_id.clone()).or_insert(i as u32);
        }
        let stop_points: Vec<GeoPoint> = stops.iter().map(|s| s.point).collect();
        let stop_index = SpatialIndex::for_radius(&stop_points, config.max_walk_m);
        Ok(Network {
            config,
            stops,
            nodes,
            trips,
            links,
            stop_offsets,
            out_offsets,
            in_offsets,
            in_links,
            stop_lookup,
            stop_points,
            stop_index,
        })
    }

    pub fn config(&self) -> &BuildConfig {
        &self.config
    }

    pub fn stops(&self) -> &[NetStop] {
        &self.stops
    }

    pub fn nodes(&self) -> &[EventNode] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn trips(&self) -> &[String] {
        &self.trips
    }

    pub fn node(&self, id: NodeId) -> EventNode {
        self.nodes[id as usize]
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id as usize]
    }

    pub fn stop_of(&self, node: NodeId) -> u32 {
        self.nodes[node as usize].stop
    }

    pub fn time_of(&self, node: NodeId) -> u32 {
        self.nodes[node as usize].time_s
    }

    pub fn trip_id(&self, link: &Link) -> Option<&str> {
        link.trip.map(|t| self.trips[t as usize].as_str())
    }

    pub fn stop_index_of(&self, stop_id: &str) -> Option<u32> {
        self.stop_lookup.get(stop_id).copied()
    }

    pub fn stop_points(&self) -> &[GeoPoint] {
        &self.stop_points
    }

    /// Stops within `radius_m` of `p`, with distances.
    pub fn stops_near(&self, p: GeoPoint, radius_m: f64) -> Vec<(u32, f64)> {
        self.stop_index.within(&self.stop_points, p, radius_m)
    }

    /// Node ids at `stop`, in time order.
    pub fn stop_nodes(&self, stop: u32) -> std::ops::Range<NodeId> {
        self.stop_offsets[stop as usize]..self.stop_offsets[stop as usize + 1]
    }

    /// Earliest node at `stop` with time at or after `t`.
    pub fn first_node_at_or_after(&self, stop: u32, t: u32) -> Option<NodeId> {
        let range = self.stop_nodes(stop);
        let slice = &self.nodes[range.start as usize..range.end as usize];
        let k = slice.partition_point(|n| n.time_s < t);
        (k < slice.len()).then(|| range.start + k as u32)
    }

    /// Latest node at `stop` with time at or before `t`.
    pub fn last_node_at_or_before(&self, stop: u32, t: u32) -> Option<NodeId> {
        let range = self.stop_nodes(stop);
        let slice = &self.nodes[range.start as usize..range.end as usize];
        let k = slice.partition_point(|n| n.time_s <= t);
        (k > 0).then(|| range.start + k as u32 - 1)
    }

    pub fn out_links(&self, node: NodeId) -> std::ops::Range<LinkId> {
        self.out_offsets[node as usize]..self.out_offsets[node as usize + 1]
    }

    pub fn in_links(&self, node: NodeId) -> &[LinkId] {
        &self.in_links[self.in_offsets[node as usize] as usize..self.in_offsets[node as usize + 1] as usize]
    }

    pub fn stats(&self) -> NetworkStats {
        let count = |k| self.links.iter().filter(|l| l.kind == k).count();
        NetworkStats {
            stops: self.stops.len(),
            nodes: self.nodes.len(),
            links: self.links.len(),
            waiting_links: count(LinkKind::Waiting),
            transit_links: count(LinkKind::Transit),
            walking_links: count(LinkKind::Walking),
        }
    }

    /// Mean of the stop coordinates; the origin for local planar projections.
    pub fn centroid(&self) -> GeoPoint {
        if self.stops.is_empty() {
            return GeoPoint::new(0.0, 0.0);
        }
        let n = self.stops.len() as f64;
        let (lat, lon) = self.stop_points.iter().fold((0.0, 0.0), |(a, b), p| (a + p.lat, b + p.lon));
        GeoPoint::new(lat / n, lon / n)
    }
}
