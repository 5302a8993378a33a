use std::f64::consts::TAU;

use geo::{Area, BooleanOps, Coord, LineString, MultiPolygon, Polygon};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::search::search;
use super::{Direction, HyperNode, QueryEndpoint, RouteError};
use crate::geo::{GeoPoint, METERS_PER_DEG};
use crate::gtfs::time::format_time;
use crate::network::Network;

/// Vertices per circle polygon.
pub const CIRCLE_SEGMENTS: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsochroneQuery {
    pub direction: Direction,
    pub endpoints: Vec<QueryEndpoint>,
    /// Departure time (forward) or arrival deadline (reverse).
    pub anchor_s: u32,
    pub cutoff_s: u32,
    /// Ascending, none above `cutoff_s`.
    pub bands_s: Vec<u32>,
}

impl IsochroneQuery {
    /// A query with [`default_bands`].
    pub fn new(hyper: HyperNode, cutoff_s: u32) -> Self {
        IsochroneQuery {
            direction: hyper.direction,
            endpoints: hyper.endpoints,
            anchor_s: hyper.anchor_s,
            cutoff_s,
            bands_s: default_bands(cutoff_s),
        }
    }

    pub fn with_bands(mut self, bands_s: Vec<u32>) -> Self {
        self.bands_s = bands_s;
        self
    }

    pub fn hyper_node(&self) -> HyperNode {
        HyperNode { direction: self.direction, endpoints: self.endpoints.clone(), anchor_s: self.anchor_s }
    }
}

/// 20, 40, ..., 120 minutes, keeping those within `cutoff_s`; just the
/// cutoff when it is below 20 minutes.
pub fn default_bands(cutoff_s: u32) -> Vec<u32> {
    let bands: Vec<u32> = (1..=6).map(|k| k * 1200).filter(|&b| b <= cutoff_s).collect();
    if bands.is_empty() {
        vec![cutoff_s]
    } else {
        bands
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StopTravelTime {
    pub stop_id: String,
    pub point: GeoPoint,
    pub label_s: u32,
    pub travel_time_s: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub center: GeoPoint,
    pub radius_m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Band {
    pub threshold_s: u32,
    pub circles: Vec<Circle>,
    /// Union of the circles in the local planar projection, meters.
    pub projected: MultiPolygon<f64>,
    /// The same union in lon/lat degrees.
    pub polygon: MultiPolygon<f64>,
}

impl Band {
    pub fn area_m2(&self) -> f64 {
        self.projected.unsigned_area()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsochroneResult {
    pub query: IsochroneQuery,
    /// Origin of the planar projection used for the bands.
    pub projection_origin: GeoPoint,
    pub stop_times: Vec<StopTravelTime>,
    pub bands: Vec<Band>,
}

/// Equirectangular projection about a fixed point.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LocalProjection {
    origin: GeoPoint,
    m_per_deg_lon: f64,
}

impl LocalProjection {
    pub(crate) fn new(origin: GeoPoint) -> Self {
        LocalProjection { origin, m_per_deg_lon: METERS_PER_DEG * origin.lat.to_radians().cos() }
    }

    pub(crate) fn forward(&self, p: GeoPoint) -> Coord<f64> {
        Coord { x: (p.lon - self.origin.lon) * self.m_per_deg_lon, y: (p.lat - self.origin.lat) * METERS_PER_DEG }
    }

    pub(crate) fn inverse(&self, c: Coord<f64>) -> Coord<f64> {
        Coord { x: self.origin.lon + c.x / self.m_per_deg_lon, y: self.origin.lat + c.y / METERS_PER_DEG }
    }
}

fn circle_polygon(center: Coord<f64>, r: f64) -> Polygon<f64> {
    let ring: Vec<Coord<f64>> = (0..CIRCLE_SEGMENTS)
        .map(|k| {
            let a = k as f64 * TAU / CIRCLE_SEGMENTS as f64;
            Coord { x: center.x + r * a.cos(), y: center.y + r * a.sin() }
        })
        .collect();
    Polygon::new(LineString::from(ring), vec![])
}

/// Labels every stop within `cutoff_s` of the query's endpoints and draws
/// one walking-buffer band per threshold.
pub fn isochrone(net: &Network, query: &IsochroneQuery) -> Result<IsochroneResult, RouteError> {
    if query.bands_s.windows(2).any(|w| w[0] >= w[1]) {
        return Err(RouteError::InvalidQuery("band thresholds must be strictly ascending".into()));
    }
    if query.bands_s.last().is_some_and(|&b| b > query.cutoff_s) {
        return Err(RouteError::InvalidQuery("band threshold above cutoff".into()));
    }
    let labels = search(net, &query.hyper_node(), Some(query.cutoff_s))?;
    let stop_times: Vec<StopTravelTime> = labels
        .reached_stops()
        .map(|(s, label_s)| {
            let stop = &net.stops()[s as usize];
            StopTravelTime {
                stop_id: stop.stop_id.clone(),
                point: stop.point,
                label_s,
                travel_time_s: label_s.abs_diff(query.anchor_s),
            }
        })
        .collect();

    let cfg = net.config();
    let proj = LocalProjection::new(net.centroid());
    let mut bands: Vec<Band> = Vec::with_capacity(query.bands_s.len());
    for &t in &query.bands_s {
        let circles: Vec<Circle> = stop_times
            .iter()
            .filter(|st| st.travel_time_s <= t)
            .map(|st| Circle {
                center: st.point,
                radius_m: cfg.max_walk_m.min(f64::from(t - st.travel_time_s) * cfg.walk_speed_mps),
            })
            .collect();
        // Circles only grow with the threshold, so the previous band plus the
        // circles that changed covers exactly the same area as all circles.
        let (base, fresh): (Option<&MultiPolygon<f64>>, Vec<&Circle>) = match bands.last() {
            Some(prev) => {
                let old: std::collections::HashMap<(u64, u64), f64> = prev
                    .circles
                    .iter()
                    .map(|c| ((c.center.lat.to_bits(), c.center.lon.to_bits()), c.radius_m))
                    .collect();
                let fresh = circles
                    .iter()
                    .filter(|c| old.get(&(c.center.lat.to_bits(), c.center.lon.to_bits())) != Some(&c.radius_m))
                    .collect();
                (Some(&prev.projected), fresh)
            }
            None => (None, circles.iter().collect()),
        };
        let polys: Vec<Polygon<f64>> = fresh
            .iter()
            .filter(|c| c.radius_m > 0.0)
            .map(|c| circle_polygon(proj.forward(c.center), c.radius_m))
            .collect();
        let added: MultiPolygon<f64> =
            if polys.is_empty() { MultiPolygon::new(vec![]) } else { geo::unary_union(&polys) };
        let projected = match base {
            Some(b) if !b.0.is_empty() && !added.0.is_empty() => b.union(&added),
            Some(b) if added.0.is_empty() => b.clone(),
            _ => added,
        };
        let polygon = unproject(&proj, &projected);
        bands.push(Band { threshold_s: t, circles, projected, polygon });
    }
    Ok(IsochroneResult { query: query.clone(), projection_origin: proj.origin, stop_times, bands })
}

fn unproject(proj: &LocalProjection, mp: &MultiPolygon<f64>) -> MultiPolygon<f64> {
    let ring = |ls: &LineString<f64>| LineString::from(ls.0.iter().map(|&c| proj.inverse(c)).collect::<Vec<_>>());
    MultiPolygon::new(
        mp.0.iter().map(|p| Polygon::new(ring(p.exterior()), p.interiors().iter().map(ring).collect())).collect(),
    )
}

fn round7(v: f64) -> f64 {
    (v * 1e7).round() / 1e7
}

fn multipolygon_coords(mp: &MultiPolygon<f64>) -> Value {
    let ring = |ls: &LineString<f64>| -> Value { ls.0.iter().map(|c| json!([round7(c.x), round7(c.y)])).collect() };
    mp.0.iter()
        .map(|p| {
            let mut rings = vec![ring(p.exterior())];
            rings.extend(p.interiors().iter().map(ring));
            Value::Array(rings)
        })
        .collect()
}

/// FeatureCollection with one MultiPolygon feature per band followed by one
/// point feature per labelled stop. The query is echoed as a `query` member.
pub fn isochrone_geojson(result: &IsochroneResult) -> String {
    let q = &result.query;
    let mut features: Vec<Value> = result
        .bands
        .iter()
        .map(|b| {
            json!({
                "type": "Feature",
                "geometry": {"type": "MultiPolygon", "coordinates": multipolygon_coords(&b.polygon)},
                "properties": {
                    "kind": "band",
                    "threshold_s": b.threshold_s,
                    "threshold_min": f64::from(b.threshold_s) / 60.0,
                    "area_m2": b.area_m2().round(),
                    "stops": b.circles.len(),
                },
            })
        })
        .collect();
    features.extend(result.stop_times.iter().map(|st| {
        json!({
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": [st.point.lon, st.point.lat]},
            "properties": {
                "kind": "stop",
                "stop_id": st.stop_id,
                "label_s": st.label_s,
                "travel_time_s": st.travel_time_s,
            },
        })
    }));
    let doc = json!({
        "type": "FeatureCollection",
        "query": {
            "direction": q.direction,
            "endpoints": q.endpoints.iter().map(ToString::to_string).collect::<Vec<_>>(),
            "anchor": format_time(q.anchor_s),
            "anchor_s": q.anchor_s,
            "cutoff_s": q.cutoff_s,
            "bands_s": q.bands_s,
        },
        "features": features,
    });
    serde_json::to_string(&doc).expect("json values serialize")
}

/// `stop_id,travel_time_s` CSV, one row per labelled stop.
pub fn isochrone_table(result: &IsochroneResult) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let io = "writing to memory cannot fail";
    w.write_record(["stop_id", "travel_time_s"]).expect(io);
    for st in &result.stop_times {
        w.write_record([st.stop_id.as_str(), &st.travel_time_s.to_string()]).expect(io);
    }
    String::from_utf8(w.into_inner().expect(io)).expect("csv of utf-8 fields is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{build_network, BuildConfig};
    use crate::synth::{self, hms};

    fn three() -> Network {
        build_network(&synth::three_route_feed(), &BuildConfig::new(["WKDY"])).unwrap()
    }

    #[test]
    fn default_band_thresholds() {
        assert_eq!(default_bands(7200), [1200, 2400, 3600, 4800, 6000, 7200]);
        assert_eq!(default_bands(3000), [1200, 2400]);
        assert_eq!(default_bands(600), [600]);
    }

    #[test]
    fn zero_cutoff_is_just_the_origin() {
        let net = three();
        let q = IsochroneQuery::new(HyperNode::stop("S1", hms(8, 0, 0)), 0);
        let r = isochrone(&net, &q).unwrap();
        assert_eq!(r.stop_times.len(), 1);
        assert_eq!(r.stop_times[0].stop_id, "S1");
        assert_eq!(r.bands.len(), 1);
        assert_eq!(r.bands[0].circles, [Circle { center: r.stop_times[0].point, radius_m: 0.0 }]);
        assert!(r.bands[0].polygon.0.is_empty());
    }

    #[test]
    fn bands_grow_and_circles_are_capped() {
        let net = three();
        let q = IsochroneQuery::new(HyperNode::stop("S1", hms(8, 0, 0)), 3600);
        let r = isochrone(&net, &q).unwrap();
        assert!(r.stop_times.iter().all(|s| s.travel_time_s <= 3600));
        let areas: Vec<f64> = r.bands.iter().map(Band::area_m2).collect();
        assert!(areas.windows(2).all(|w| w[0] <= w[1]), "{areas:?}");
        let cap = net.config().max_walk_m;
        let full = std::f64::consts::PI * cap * cap;
        // A 32-gon covers slightly less than its circle.
        let first = &r.bands[0];
        assert_eq!(first.circles.len(), 3);
        assert!(first.area_m2() < 3.0 * full && first.area_m2() > 0.5 * full);
    }

    #[test]
    fn rejects_bad_bands() {
        let net = three();
        let q = IsochroneQuery::new(HyperNode::stop("S1", 0), 600).with_bands(vec![600, 300]);
        assert!(matches!(isochrone(&net, &q), Err(RouteError::InvalidQuery(_))));
        let q = IsochroneQuery::new(HyperNode::stop("S1", 0), 600).with_bands(vec![900]);
        assert!(matches!(isochrone(&net, &q), Err(RouteError::InvalidQuery(_))));
    }

    #[test]
    fn renders_geojson_and_table() {
        let net = three();
        let q = IsochroneQuery::new(HyperNode::stop("S1", hms(8, 0, 0)), 1200);
        let r = isochrone(&net, &q).unwrap();
        let doc: Value = serde_json::from_str(&isochrone_geojson(&r)).unwrap();
        let feats = doc["features"].as_array().unwrap();
        assert_eq!(feats[0]["geometry"]["type"], "MultiPolygon");
        assert_eq!(feats[0]["properties"]["threshold_s"], 1200);
        assert_eq!(feats.len(), 1 + r.stop_times.len());
        assert_eq!(doc["query"]["endpoints"][0], "S1");
        let table = isochrone_table(&r);
        assert!(table.starts_with("stop_id,travel_time_s\nS1,0\nS2,600\nS3,1200\n"), "{table}");
    }
}
