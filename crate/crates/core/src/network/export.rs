//! GeoJSON layers for inspecting a network in external (3-D) viewers.

use serde_json::{json, Value};

use super::Network;

/// One point feature per event node, with its stop and time.
pub fn nodes_geojson(net: &Network) -> Value {
    let features: Vec<Value> = net
        .nodes()
        .iter()
        .enumerate()
        .map(|(id, n)| {
            let stop = &net.stops()[n.stop as usize];
            json!({
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": [stop.point.lon, stop.point.lat]},
                "properties": {"node_id": id, "stop_id": stop.stop_id, "time_s": n.time_s},
            })
        })
        .collect();
    json!({"type": "FeatureCollection", "features": features})
}

/// One line feature per link, with its kind, duration, and trip.
pub fn links_geojson(net: &Network) -> Value {
    let features: Vec<Value> = net
        .links()
        .iter()
        .enumerate()
        .map(|(id, l)| {
            let a = net.stops()[net.stop_of(l.from) as usize].point;
            let b = net.stops()[net.stop_of(l.to) as usize].point;
            json!({
                "type": "Feature",
                "geometry": {"type": "LineString", "coordinates": [[a.lon, a.lat], [b.lon, b.lat]]},
                "properties": {
                    "link_id": id,
                    "kind": l.kind.as_str(),
                    "from_node": l.from,
                    "to_node": l.to,
                    "from_time_s": net.time_of(l.from),
                    "to_time_s": net.time_of(l.to),
                    "duration_s": l.duration_s,
                    "trip_id": net.trip_id(l),
                },
            })
        })
        .collect();
    json!({"type": "FeatureCollection", "features": features})
}
