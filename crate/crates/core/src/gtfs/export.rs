//! Map layers and paged table views of a parsed feed.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{write_feed_tables, Feed};

pub fn stops_geojson(feed: &Feed) -> Value {
    let features: Vec<Value> = feed
        .stops
        .iter()
        .map(|s| {
            json!({
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": [s.lon, s.lat]},
                "properties": {"stop_id": s.stop_id, "name": s.name},
            })
        })
        .collect();
    json!({"type": "FeatureCollection", "features": features})
}

/// One LineString per shape, points in sequence order.
pub fn shapes_geojson(feed: &Feed) -> Value {
    let mut shapes: BTreeMap<&str, Vec<(u32, [f64; 2])>> = BTreeMap::new();
    for p in feed.shapes.iter().flatten() {
        shapes.entry(&p.shape_id).or_default().push((p.sequence, [p.lon, p.lat]));
    }
    let features: Vec<Value> = shapes
        .into_iter()
        .map(|(id, mut pts)| {
            pts.sort_by_key(|p| p.0);
            let coords: Vec<[f64; 2]> = pts.into_iter().map(|p| p.1).collect();
            json!({
                "type": "Feature",
                "geometry": {"type": "LineString", "coordinates": coords},
                "properties": {"shape_id": id},
            })
        })
        .collect();
    json!({"type": "FeatureCollection", "features": features})
}

/// A page of a table as it would be written back out, all fields as text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TablePage {
    pub table: String,
    pub page: usize,
    pub page_size: usize,
    pub total_rows: usize,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// `None` if the feed has no such table. Pages are 0-based; a page past the
/// end is empty.
pub fn table_page(feed: &Feed, table: &str, page: usize, page_size: usize) -> Option<TablePage> {
    let (_, bytes) = write_feed_tables(feed).into_iter().find(|(name, _)| *name == table)?;
    let mut r = csv::Reader::from_reader(bytes.as_slice());
    let header = r.headers().expect("table written by us").iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    let mut total_rows = 0;
    let skip = page.saturating_mul(page_size);
    for rec in r.records() {
        let rec = rec.expect("table written by us");
        if total_rows >= skip && rows.len() < page_size {
            rows.push(rec.iter().map(str::to_string).collect());
        }
        total_rows += 1;
    }
    Some(TablePage { table: table.to_string(), page, page_size, total_rows, header, rows })
}
