use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::search::{earliest_arrival, reconstruct_path};
use super::{ArrivalLabels, Direction, QueryEndpoint, RouteError};
use crate::gtfs::time::format_time;
use crate::network::{LinkKind, Network};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LegKind {
    Walk,
    Wait,
    Ride,
}

/// A stretch of a journey. Stops are `None` at a coordinate endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Leg {
    pub kind: LegKind,
    pub from_stop: Option<String>,
    pub to_stop: Option<String>,
    pub start_s: u32,
    pub end_s: u32,
    pub trip_id: Option<String>,
}

impl Leg {
    pub fn duration_s(&self) -> u32 {
        self.end_s - self.start_s
    }
}

/// Travel time split into its parts; `walk_s + wait_s + vehicle_s == total_s`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JourneyBreakdown {
    pub depart_s: u32,
    pub arrive_s: u32,
    pub total_s: u32,
    pub walk_s: u32,
    pub wait_s: u32,
    pub vehicle_s: u32,
    pub legs: Vec<Leg>,
}

/// Best arrival over a set of destinations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arrival {
    /// Index into the destination list.
    pub endpoint: usize,
    pub stop: u32,
    pub egress_walk_s: u32,
    pub time_s: u32,
}

/// Earliest arrival at any of `destinations` under forward `labels`.
/// Coordinates add the walk from their nearest-in-time stop.
pub fn best_arrival(
    net: &Network,
    labels: &ArrivalLabels,
    destinations: &[QueryEndpoint],
) -> Result<Option<Arrival>, RouteError> {
    if labels.direction() != Direction::Forward {
        return Err(RouteError::InvalidQuery("arrivals need a forward search".into()));
    }
    let mut best: Option<Arrival> = None;
    for (endpoint, ep) in destinations.iter().enumerate() {
        for (stop, egress_walk_s) in endpoint_stops(net, ep)? {
            let Some(t) = labels.label(stop) else { continue };
            let time_s = t + egress_walk_s;
            if best.is_none_or(|b| time_s < b.time_s) {
                best = Some(Arrival { endpoint, stop, egress_walk_s, time_s });
            }
        }
    }
    Ok(best)
}

fn endpoint_stops(net: &Network, ep: &QueryEndpoint) -> Result<Vec<(u32, u32)>, RouteError> {
    Ok(match ep {
        QueryEndpoint::Stop(id) => vec![(net.stop_index_of(id).ok_or_else(|| RouteError::NoSuchStop(id.clone()))?, 0)],
        QueryEndpoint::Coord(p) => {
            if !p.is_valid() {
                return Err(RouteError::BadCoordinate(p.lat, p.lon));
            }
            let cfg = net.config();
            net.stops_near(*p, cfg.max_walk_m).into_iter().map(|(s, d)| (s, cfg.walk_time_s(d))).collect()
        }
    })
}

/// Decomposes the forward journey ending with `arrival`.
///
/// A walking link counts its on-foot part as walking and the remainder,
/// spent at the target stop before its next event, as waiting. A walk that
/// ends the journey counts only the on-foot part.
pub fn journey_breakdown(
    net: &Network,
    labels: &ArrivalLabels,
    origins: &[QueryEndpoint],
    arrival: &Arrival,
) -> Result<JourneyBreakdown, RouteError> {
    let stop_name = |s: u32| Some(net.stops()[s as usize].stop_id.clone());
    let path = reconstruct_path(net, labels, &net.stops()[arrival.stop as usize].stop_id)?;
    let seed = &labels.seeds()[path.seed];
    let anchor = labels.anchor_s();
    let mut legs = Vec::new();
    let mut push =
        |kind, from: Option<String>, to: Option<String>, start_s: u32, end_s: u32, trip_id: Option<String>| {
            if end_s > start_s || kind == LegKind::Ride {
                legs.push(Leg { kind, from_stop: from, to_stop: to, start_s, end_s, trip_id });
            }
        };

    if seed.access_walk_s > 0 || matches!(origins.get(seed.endpoint), Some(QueryEndpoint::Coord(_))) {
        push(LegKind::Walk, None, stop_name(seed.stop), anchor, seed.ready_s, None);
    }
    let mut end = seed.ready_s;
    if let Some(&first) = path.links.first() {
        let t0 = net.time_of(net.link(first).from);
        push(LegKind::Wait, stop_name(seed.stop), stop_name(seed.stop), seed.ready_s, t0, None);
    }
    for (k, &id) in path.links.iter().enumerate() {
        let l = net.link(id);
        let (tu, tv) = (net.time_of(l.from), net.time_of(l.to));
        let (su, sv) = (net.stop_of(l.from), net.stop_of(l.to));
        match l.kind {
            LinkKind::Waiting => push(LegKind::Wait, stop_name(su), stop_name(sv), tu, tv, None),
            LinkKind::Transit => {
                push(LegKind::Ride, stop_name(su), stop_name(sv), tu, tv, net.trip_id(l).map(str::to_string))
            }
            LinkKind::Walking => {
                push(LegKind::Walk, stop_name(su), stop_name(sv), tu, tu + l.walk_s, None);
                if k + 1 < path.links.len() {
                    push(LegKind::Wait, stop_name(sv), stop_name(sv), tu + l.walk_s, tv, None);
                }
            }
        }
        end = if l.kind == LinkKind::Walking && k + 1 == path.links.len() { tu + l.walk_s } else { tv };
    }
    debug_assert_eq!(end + arrival.egress_walk_s, arrival.time_s);
    if arrival.egress_walk_s > 0 {
        push(LegKind::Walk, stop_name(arrival.stop), None, end, end + arrival.egress_walk_s, None);
    }

    let legs = merge_legs(legs);
    let sum = |kind| legs.iter().filter(|l| l.kind == kind).map(Leg::duration_s).sum();
    Ok(JourneyBreakdown {
        depart_s: anchor,
        arrive_s: arrival.time_s,
        total_s: arrival.time_s - anchor,
        walk_s: sum(LegKind::Walk),
        wait_s: sum(LegKind::Wait),
        vehicle_s: sum(LegKind::Ride),
        legs,
    })
}

fn merge_legs(legs: Vec<Leg>) -> Vec<Leg> {
    let mut out: Vec<Leg> = Vec::with_capacity(legs.len());
    for leg in legs {
        if let Some(prev) = out.last_mut() {
            let joins = prev.kind == leg.kind
                && prev.end_s == leg.start_s
                && match leg.kind {
                    LegKind::Ride => prev.trip_id == leg.trip_id,
                    LegKind::Wait => prev.to_stop == leg.from_stop,
                    LegKind::Walk => false,
                };
            if joins {
                prev.end_s = leg.end_s;
                prev.to_stop = leg.to_stop;
                continue;
            }
        }
        out.push(leg);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileSample {
    pub departure_s: u32,
    /// `None` when the destination cannot be reached from this departure.
    pub journey: Option<JourneyBreakdown>,
}

/// Travel time between two endpoints sampled across a departure window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JourneyProfile {
    pub origin: QueryEndpoint,
    pub destination: QueryEndpoint,
    pub window_start_s: u32,
    pub window_end_s: u32,
    pub step_s: u32,
    pub samples: Vec<ProfileSample>,
}

/// Runs one earliest-arrival query per departure `start, start + step, ...`
/// up to and including `end`.
pub fn journey_profile(
    net: &Network,
    origin: &QueryEndpoint,
    destination: &QueryEndpoint,
    start_s: u32,
    end_s: u32,
    step_s: u32,
) -> Result<JourneyProfile, RouteError> {
    if step_s == 0 {
        return Err(RouteError::InvalidQuery("step must be positive".into()));
    }
    if end_s < start_s {
        return Err(RouteError::InvalidQuery("window ends before it starts".into()));
    }
    endpoint_stops(net, origin)?;
    endpoint_stops(net, destination)?;
    let origins = std::slice::from_ref(origin);
    let destinations = std::slice::from_ref(destination);
    let count = (end_s - start_s) / step_s + 1;
    let samples = (0..count)
        .into_par_iter()
        .map(|k| {
            let departure_s = start_s + k * step_s;
            let labels = match earliest_arrival(net, origins, departure_s) {
                Ok(l) => l,
                Err(RouteError::OriginIsolated) => return Ok(ProfileSample { departure_s, journey: None }),
                Err(e) => return Err(e),
            };
            let journey = match best_arrival(net, &labels, destinations)? {
                Some(a) => Some(journey_breakdown(net, &labels, origins, &a)?),
                None => None,
            };
            Ok(ProfileSample { departure_s, journey })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(JourneyProfile {
        origin: origin.clone(),
        destination: destination.clone(),
        window_start_s: start_s,
        window_end_s: end_s,
        step_s,
        samples,
    })
}

/// One CSV row per sample; unreachable samples leave the times empty.
pub fn profile_table(profile: &JourneyProfile) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let io = "writing to memory cannot fail";
    w.write_record(["departure", "total_s", "walk_s", "wait_s", "vehicle_s", "reachable"]).expect(io);
    for s in &profile.samples {
        let dep = format_time(s.departure_s);
        match &s.journey {
            Some(j) => w
                .write_record([
                    dep,
                    j.total_s.to_string(),
                    j.walk_s.to_string(),
                    j.wait_s.to_string(),
                    j.vehicle_s.to_string(),
                    "true".into(),
                ])
                .expect(io),
            None => w.write_record([dep.as_str(), "", "", "", "", "false"]).expect(io),
        }
    }
    String::from_utf8(w.into_inner().expect(io)).expect("csv of utf-8 fields is utf-8")
}
