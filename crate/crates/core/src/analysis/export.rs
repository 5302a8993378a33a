use num_rational::Ratio;
use serde_json::{json, Value};

use super::*;

fn cell_polygon(spec: &GridSpec, row: u32, col: u32) -> Value {
    let (s, w, n, e) = spec.cell_bounds(row, col);
    json!({"type": "Polygon", "coordinates": [[[w, s], [e, s], [e, n], [w, n], [w, s]]]})
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 fields")
}

/// One square feature per populated cell. `normalized` is the frequency
/// over the map's maximum. The grid and window travel along as foreign
/// members so the document can be read back with [`map_from_geojson`].
pub fn map_geojson(map: &GridFrequencyMap) -> String {
    let max = map.cells.values().map(|c| c.avg_frequency).max().unwrap_or_default();
    let features: Vec<Value> = map
        .cells
        .values()
        .map(|c| {
            let normalized = if max == Ratio::from_integer(0) { 0.0 } else { freq_f64(&(c.avg_frequency / max)) };
            json!({
                "type": "Feature",
                "geometry": cell_polygon(&map.spec, c.row, c.col),
                "properties": {
                    "row": c.row,
                    "col": c.col,
                    "stop_count": c.stop_count,
                    "visit_count": c.visit_count,
                    "avg_frequency": freq_f64(&c.avg_frequency),
                    "normalized": normalized,
                },
            })
        })
        .collect();
    let doc = json!({
        "type": "FeatureCollection",
        "grid": map.spec,
        "window": map.window,
        "label": map.label,
        "features": features,
    });
    serde_json::to_string(&doc).expect("json values serialize")
}

/// Reads a document written by [`map_geojson`]. Frequencies are rebuilt
/// exactly from the counts and the window.
pub fn map_from_geojson(text: &str) -> Result<GridFrequencyMap> {
    let bad = |m: &str| AnalysisError::Malformed(m.to_string());
    let doc: Value = serde_json::from_str(text).map_err(|e| AnalysisError::Malformed(e.to_string()))?;
    let spec: GridSpec = serde_json::from_value(doc.get("grid").cloned().ok_or_else(|| bad("missing `grid`"))?)
        .map_err(|e| bad(&e.to_string()))?;
    spec.check()?;
    let window: TimeWindow = serde_json::from_value(doc.get("window").cloned().ok_or_else(|| bad("missing `window`"))?)
        .map_err(|e| bad(&e.to_string()))?;
    let window = TimeWindow::new(window.start_s, window.end_s)?;
    let label = doc.get("label").and_then(Value::as_str).unwrap_or_default().to_string();
    let features = doc.get("features").and_then(Value::as_array).ok_or_else(|| bad("missing `features`"))?;
    let mut cells = BTreeMap::new();
    for f in features {
        let p = f.get("properties").ok_or_else(|| bad("feature without properties"))?;
        let num = |k: &str| p.get(k).and_then(Value::as_u64).ok_or_else(|| bad(&format!("feature lacks `{k}`")));
        let (row, col) = (num("row")? as u32, num("col")? as u32);
        let (stop_count, visit_count) = (num("stop_count")? as u32, num("visit_count")?);
        if row >= spec.n_rows || col >= spec.n_cols || stop_count == 0 {
            return Err(bad(&format!("cell ({row}, {col}) is not a populated grid cell")));
        }
        let avg_frequency = Ratio::new(visit_count * 3600, u64::from(stop_count) * u64::from(window.duration_s()));
        cells.insert((row, col), CellStat { row, col, stop_count, visit_count, avg_frequency });
    }
    Ok(GridFrequencyMap { spec, window, label, cells })
}

pub fn map_csv(map: &GridFrequencyMap) -> String {
    let mut w = csv_writer();
    let io = "in-memory writer";
    w.write_record(["row", "col", "stop_count", "visit_count", "avg_frequency"]).expect(io);
    for c in map.cells.values() {
        w.write_record([
            c.row.to_string(),
            c.col.to_string(),
            c.stop_count.to_string(),
            c.visit_count.to_string(),
            freq_f64(&c.avg_frequency).to_string(),
        ])
        .expect(io);
    }
    finish(w)
}

/// One square feature per cell with `diff` (b − a) and `normalized` in
/// `[-1, 1]`, for a diverging color scale.
pub fn diff_geojson(diff: &GridDiff) -> String {
    let features: Vec<Value> = diff
        .cells
        .iter()
        .map(|(&(row, col), v)| {
            json!({
                "type": "Feature",
                "geometry": cell_polygon(&diff.spec, row, col),
                "properties": {
                    "row": row,
                    "col": col,
                    "diff": diff_f64(v),
                    "normalized": diff.normalized((row, col)),
                },
            })
        })
        .collect();
    let doc = json!({
        "type": "FeatureCollection",
        "grid": diff.spec,
        "window_a": diff.window_a,
        "window_b": diff.window_b,
        "label_a": diff.label_a,
        "label_b": diff.label_b,
        "warnings": diff.warnings,
        "features": features,
    });
    serde_json::to_string(&doc).expect("json values serialize")
}

pub fn diff_csv(diff: &GridDiff) -> String {
    let mut w = csv_writer();
    let io = "in-memory writer";
    w.write_record(["row", "col", "diff", "normalized"]).expect(io);
    for (&(row, col), v) in &diff.cells {
        w.write_record([
            row.to_string(),
            col.to_string(),
            diff_f64(v).to_string(),
            diff.normalized((row, col)).to_string(),
        ])
        .expect(io);
    }
    finish(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{hms, FeedBuilder};

    fn single_cell_map() -> GridFrequencyMap {
        let feed = FeedBuilder::new()
            .stop("X", 36.105, -86.795)
            .stop("Y", 36.106, -86.79)
            .trip("T", "R", "WKDY", &[("X", hms(7, 30, 0), hms(7, 30, 0)), ("Y", hms(7, 40, 0), hms(7, 40, 0))])
            .build();
        let spec = GridSpec { min_lat: 36.1, min_lon: -86.8, cell_size_deg: 0.01, n_rows: 1, n_cols: 1 };
        grid_frequency(&feed, &["WKDY"], spec, TimeWindow::new(hms(7, 0, 0), hms(9, 0, 0)).unwrap()).unwrap()
    }

    #[test]
    fn single_cell_square_matches_bounds() {
        let doc: Value = serde_json::from_str(&map_geojson(&single_cell_map())).unwrap();
        let feats = doc["features"].as_array().unwrap();
        assert_eq!(feats.len(), 1);
        let ring = &feats[0]["geometry"]["coordinates"][0];
        assert_eq!(ring[0], json!([-86.8, 36.1]));
        assert_eq!(ring[2], json!([-86.8 + 0.01, 36.1 + 0.01]));
        assert_eq!(feats[0]["properties"]["avg_frequency"], json!(0.5));
    }

    #[test]
    fn geojson_round_trip() {
        let map = single_cell_map().with_label("before");
        assert_eq!(map_from_geojson(&map_geojson(&map)).unwrap(), map);
        assert!(matches!(map_from_geojson("{}"), Err(AnalysisError::Malformed(_))));
    }

    #[test]
    fn diff_normalization() {
        let map = single_cell_map();
        let zero = grid_diff(&map, &map).unwrap();
        let doc: Value = serde_json::from_str(&diff_geojson(&zero)).unwrap();
        assert!(doc["features"].as_array().unwrap().iter().all(|f| f["properties"]["normalized"] == json!(0.0)));

        let spec = GridSpec { n_rows: 2, n_cols: 2, ..map.spec };
        let mk = |cells: &[((u32, u32), u64)]| GridFrequencyMap {
            spec,
            window: TimeWindow::new(0, 3600).unwrap(),
            label: String::new(),
            cells: cells
                .iter()
                .map(|&((row, col), v)| {
                    (
                        (row, col),
                        CellStat { row, col, stop_count: 1, visit_count: v, avg_frequency: Ratio::from_integer(v) },
                    )
                })
                .collect(),
        };
        let d = grid_diff(&mk(&[((0, 0), 3), ((1, 1), 1)]), &mk(&[((0, 0), 1), ((1, 1), 2)])).unwrap();
        assert_eq!(d.max_abs(), Ratio::from_integer(2));
        assert_eq!(d.normalized((0, 0)), -1.0);
        assert_eq!(d.normalized((1, 1)), 0.5);
        assert!(diff_csv(&d).starts_with("row,col,diff,normalized\n0,0,-2,-1\n"));
    }
}
