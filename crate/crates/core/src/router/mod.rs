//! Queries over a [`Network`](crate::network::Network): earliest arrival
//! from one or more origins, latest departure towards one or more
//! destinations (the same search on the transposed graph), isochrones, and
//! journey decomposition into walking, waiting and riding time.
//!
//! Several endpoints in one query behave as a single virtual node joined
//! to all of them: labels are the best over the endpoints.

mod isochrone;
mod journey;
mod search;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::geo::GeoPoint;

pub use isochrone::{
    default_bands, isochrone, isochrone_geojson, isochrone_table, Band, Circle, IsochroneQuery, IsochroneResult,
    StopTravelTime, CIRCLE_SEGMENTS,
};
pub use journey::{
    best_arrival, journey_breakdown, journey_profile, profile_table, Arrival, JourneyBreakdown, JourneyProfile, Leg,
    LegKind, ProfileSample,
};
pub use search::{earliest_arrival, latest_departure, reconstruct_path, search, ArrivalLabels, Seed, Via};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum RouteError {
    #[error("no such stop `{0}`")]
    NoSuchStop(String),
    #[error("origin is isolated: no event node can be reached from it")]
    OriginIsolated,
    #[error("destination is isolated: no event node leads to it")]
    DestinationIsolated,
    #[error("query has no endpoints")]
    NoEndpoints,
    #[error("coordinate ({0}, {1}) out of range")]
    BadCoordinate(f64, f64),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("stop `{0}` was not reached")]
    Unreached(String),
}

/// Where a journey starts or ends: a stop of the network or a raw
/// coordinate joined to every stop within walking range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum QueryEndpoint {
    Stop(String),
    Coord(GeoPoint),
}

impl FromStr for QueryEndpoint {
    type Err = std::convert::Infallible;

    /// `lat,lon` when both halves are numbers, otherwise a stop id.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some((a, b)) = s.split_once(',') {
            if let (Ok(lat), Ok(lon)) = (a.trim().parse::<f64>(), b.trim().parse::<f64>()) {
                return Ok(QueryEndpoint::Coord(GeoPoint::new(lat, lon)));
            }
        }
        Ok(QueryEndpoint::Stop(s.to_string()))
    }
}

impl fmt::Display for QueryEndpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueryEndpoint::Stop(id) => f.write_str(id),
            QueryEndpoint::Coord(p) => write!(f, "{},{}", p.lat, p.lon),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Depart at the anchor time; labels are earliest arrivals.
    Forward,
    /// Arrive by the anchor time; labels are latest departures.
    Reverse,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Reverse => "reverse",
        }
    }
}

/// A virtual node attached to every endpoint, anchored at a departure time
/// (forward) or an arrival deadline (reverse).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperNode {
    pub direction: Direction,
    pub endpoints: Vec<QueryEndpoint>,
    pub anchor_s: u32,
}

impl HyperNode {
    pub fn origin(endpoints: impl IntoIterator<Item = QueryEndpoint>, depart_s: u32) -> Self {
        HyperNode { direction: Direction::Forward, endpoints: endpoints.into_iter().collect(), anchor_s: depart_s }
    }

    pub fn destination(endpoints: impl IntoIterator<Item = QueryEndpoint>, arrive_by_s: u32) -> Self {
        HyperNode { direction: Direction::Reverse, endpoints: endpoints.into_iter().collect(), anchor_s: arrive_by_s }
    }

    pub fn stop(id: &str, depart_s: u32) -> Self {
        Self::origin([QueryEndpoint::Stop(id.to_string())], depart_s)
    }
}
