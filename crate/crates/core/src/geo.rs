//! Great-circle distance and a uniform-grid index for radius queries.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Meters per degree of latitude on the reference sphere.
pub const METERS_PER_DEG: f64 = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Self {
        GeoPoint { lat, lon }
    }

    pub fn is_valid(&self) -> bool {
        (-90.0..=90.0).contains(&self.lat) && (-180.0..=180.0).contains(&self.lon)
    }
}

pub fn haversine_m(a: GeoPoint, b: GeoPoint) -> f64 {
    let (p1, p2) = (a.lat.to_radians(), b.lat.to_radians());
    let dlat = p2 - p1;
    let dlon = (b.lon - a.lon).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

/// Buckets points into square lat/lon cells. Radius queries scan the cells
/// overlapping the query's bounding box, so they return a superset of the
/// points within the radius; callers filter by exact distance.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialIndex {
    cell_size_deg: f64,
    cells: HashMap<(i32, i32), Vec<u32>>,
}

impl SpatialIndex {
    pub fn new(points: &[GeoPoint], cell_size_deg: f64) -> Self {
        assert!(cell_size_deg > 0.0, "cell size must be positive");
        let mut cells: HashMap<(i32, i32), Vec<u32>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(Self::key(p.lat, p.lon, cell_size_deg)).or_default().push(i as u32);
        }
        SpatialIndex { cell_size_deg, cells }
    }

    /// Cell size matched to a query radius: about one cell per radius of latitude.
    pub fn for_radius(points: &[GeoPoint], radius_m: f64) -> Self {
        Self::new(points, (radius_m / METERS_PER_DEG).max(1e-4))
    }

    pub fn cell_size_deg(&self) -> f64 {
        self.cell_size_deg
    }

    fn key(lat: f64, lon: f64, size: f64) -> (i32, i32) {
        ((lat / size).floor() as i32, (lon / size).floor() as i32)
    }

    /// Indices of points possibly within `radius_m` of `center`, ascending.
    pub fn candidates(&self, center: GeoPoint, radius_m: f64) -> Vec<u32> {
        let size = self.cell_size_deg;
        let dlat = radius_m / METERS_PER_DEG;
        let lat_lo = (center.lat - dlat).max(-90.0);
        let lat_hi = (center.lat + dlat).min(90.0);
        let widest = lat_lo.abs().max(lat_hi.abs());
        let cos = widest.to_radians().cos();
        // Longitude span needed at the widest latitude; polar caps need all of it.
        let lon_ranges: Vec<(f64, f64)> = if lat_hi >= 90.0 || lat_lo <= -90.0 || cos * 180.0 <= dlat {
            vec![(-180.0, 180.0)]
        } else {
            let dlon = (dlat / cos).min(180.0);
            let (lo, hi) = (center.lon - dlon, center.lon + dlon);
            let mut r = vec![(lo.max(-180.0), hi.min(180.0))];
            if lo < -180.0 {
                r.push((lo + 360.0, 180.0));
            }
            if hi > 180.0 {
                r.push((-180.0, hi - 360.0));
            }
            r
        };
        let (r0, r1) = ((lat_lo / size).floor() as i32, (lat_hi / size).floor() as i32);
        let mut out = Vec::new();
        for (lo, hi) in lon_ranges {
            let (c0, c1) = ((lo / size).floor() as i32, (hi / size).floor() as i32);
            let span = (i64::from(r1) - i64::from(r0) + 1) * (i64::from(c1) - i64::from(c0) + 1);
            if span > self.cells.len() as i64 {
                for (&(r, c), ids) in &self.cells {
                    if (r0..=r1).contains(&r) && (c0..=c1).contains(&c) {
                        out.extend_from_slice(ids);
                    }
                }
            } else {
                for r in r0..=r1 {
                    for c in c0..=c1 {
                        if let Some(ids) = self.cells.get(&(r, c)) {
                            out.extend_from_slice(ids);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Points within `radius_m` of `center` with their distances, ascending by index.
    pub fn within(&self, points: &[GeoPoint], center: GeoPoint, radius_m: f64) -> Vec<(u32, f64)> {
        self.candidates(center, radius_m)
            .into_iter()
            .filter_map(|i| {
                let d = haversine_m(center, points[i as usize]);
                (d <= radius_m).then_some((i, d))
            })
            .collect()
    }
}

/// Unordered stop pairs `(a, b, meters)` with `a < b` and
/// `0 < distance <= max_walk_m`, sorted by `(a, b)`.
pub fn walk_pairs(points: &[GeoPoint], index: &SpatialIndex, max_walk_m: f64) -> Vec<(u32, u32, f64)> {
    let mut pairs = Vec::new();
    for (a, &p) in points.iter().enumerate() {
        let a = a as u32;
        for (b, d) in index.within(points, p, max_walk_m) {
            if b > a && d > 0.0 {
                pairs.push((a, b, d));
            }
        }
    }
    pairs
}
