//! Service-frequency maps: scheduled stop visits aggregated over a regular
//! lat/lon grid, and cellwise differences between two such maps.
//!
//! A cell's value is its visits per stop per hour,
//! `visit_count / (stop_count × window_hours)`, kept as an exact rational.
//! "Visits" are stop_time events (one per vehicle call) whose arrival falls
//! in the half-open window; "stops" are the stops located in that cell.

mod export;

use std::collections::{BTreeMap, HashMap};

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::geo::GeoPoint;
use crate::gtfs::{expand_frequencies, trips_for_services, Feed, GtfsError};

pub use export::{diff_csv, diff_geojson, map_csv, map_from_geojson, map_geojson};

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("time window must start before it ends")]
    EmptyWindow,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("stop `{0}` lies outside the grid")]
    StopOutsideGrid(String),
    #[error("grids differ")]
    GridMismatch,
    #[error("malformed grid document: {0}")]
    Malformed(String),
    #[error(transparent)]
    Gtfs(#[from] GtfsError),
}

pub type Result<T, E = AnalysisError> = std::result::Result<T, E>;

/// `cell_size_deg` squares in both axes, starting at the south-west corner.
/// Cell `(row, col)` covers `[min_lat + row·size, min_lat + (row+1)·size)`
/// by `[min_lon + col·size, min_lon + (col+1)·size)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub min_lat: f64,
    pub min_lon: f64,
    pub cell_size_deg: f64,
    pub n_rows: u32,
    pub n_cols: u32,
}

impl GridSpec {
    pub fn check(&self) -> Result<()> {
        if !(self.cell_size_deg > 0.0 && self.cell_size_deg.is_finite()) {
            return Err(AnalysisError::InvalidGrid(format!("cell size {}", self.cell_size_deg)));
        }
        if self.n_rows == 0 || self.n_cols == 0 {
            return Err(AnalysisError::InvalidGrid("grid has no cells".into()));
        }
        if !(self.min_lat.is_finite() && self.min_lon.is_finite()) {
            return Err(AnalysisError::InvalidGrid("non-finite corner".into()));
        }
        Ok(())
    }

    /// Smallest grid with corner snapped to a multiple of `cell_size_deg`
    /// that holds every point.
    pub fn covering(points: impl IntoIterator<Item = GeoPoint>, cell_size_deg: f64) -> Result<GridSpec> {
        let mut it = points.into_iter().peekable();
        if it.peek().is_none() {
            return Err(AnalysisError::InvalidGrid("no points to cover".into()));
        }
        let (mut lo_lat, mut lo_lon, mut hi_lat, mut hi_lon) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
        for p in it {
            lo_lat = lo_lat.min(p.lat);
            lo_lon = lo_lon.min(p.lon);
            hi_lat = hi_lat.max(p.lat);
            hi_lon = hi_lon.max(p.lon);
        }
        let snap = |v: f64| (v / cell_size_deg).floor() * cell_size_deg;
        let mut spec = GridSpec { min_lat: snap(lo_lat), min_lon: snap(lo_lon), cell_size_deg, n_rows: 1, n_cols: 1 };
        spec.check()?;
        // Floor of the offset can land a hair short after rounding; step
        // the corner back and grow until both extremes index inside.
        while (lo_lat - spec.min_lat) / cell_size_deg < 0.0 {
            spec.min_lat -= cell_size_deg;
        }
        while (lo_lon - spec.min_lon) / cell_size_deg < 0.0 {
            spec.min_lon -= cell_size_deg;
        }
        spec.n_rows = ((hi_lat - spec.min_lat) / cell_size_deg).floor() as u32 + 1;
        spec.n_cols = ((hi_lon - spec.min_lon) / cell_size_deg).floor() as u32 + 1;
        Ok(spec)
    }

    /// Same extent with cells of half the size.
    pub fn halved(&self) -> GridSpec {
        GridSpec { cell_size_deg: self.cell_size_deg / 2.0, n_rows: self.n_rows * 2, n_cols: self.n_cols * 2, ..*self }
    }

    pub fn cell_of(&self, p: GeoPoint) -> Option<(u32, u32)> {
        let r = ((p.lat - self.min_lat) / self.cell_size_deg).floor();
        let c = ((p.lon - self.min_lon) / self.cell_size_deg).floor();
        (r >= 0.0 && c >= 0.0 && r < f64::from(self.n_rows) && c < f64::from(self.n_cols))
            .then_some((r as u32, c as u32))
    }

    /// `(south, west, north, east)` edges of a cell.
    pub fn cell_bounds(&self, row: u32, col: u32) -> (f64, f64, f64, f64) {
        let s = self.cell_size_deg;
        let (south, west) = (self.min_lat + f64::from(row) * s, self.min_lon + f64::from(col) * s);
        (south, west, south + s, west + s)
    }
}

/// Half-open window `[start_s, end_s)` in seconds after midnight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub start_s: u32,
    pub end_s: u32,
}

impl TimeWindow {
    pub fn new(start_s: u32, end_s: u32) -> Result<Self> {
        if start_s >= end_s {
            return Err(AnalysisError::EmptyWindow);
        }
        Ok(TimeWindow { start_s, end_s })
    }

    pub fn duration_s(&self) -> u32 {
        self.end_s - self.start_s
    }

    pub fn contains(&self, t: u32) -> bool {
        (self.start_s..self.end_s).contains(&t)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellStat {
    pub row: u32,
    pub col: u32,
    pub stop_count: u32,
    pub visit_count: u64,
    /// Visits per stop per hour.
    pub avg_frequency: Ratio<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFrequencyMap {
    pub spec: GridSpec,
    pub window: TimeWindow,
    pub label: String,
    /// Only cells holding at least one stop.
    pub cells: BTreeMap<(u32, u32), CellStat>,
}

impl GridFrequencyMap {
    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn total_visits(&self) -> u64 {
        self.cells.values().map(|c| c.visit_count).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridDiff {
    pub spec: GridSpec,
    pub window_a: TimeWindow,
    pub window_b: TimeWindow,
    pub label_a: String,
    pub label_b: String,
    /// `b − a` over cells populated in either map.
    pub cells: BTreeMap<(u32, u32), Ratio<i128>>,
    pub warnings: Vec<String>,
}

impl GridDiff {
    pub fn max_abs(&self) -> Ratio<i128> {
        self.cells.values().map(|v| if *v < Ratio::from_integer(0) { -v } else { *v }).max().unwrap_or_default()
    }

    /// Cell value divided by the largest magnitude, in `[-1, 1]`.
    pub fn normalized(&self, cell: (u32, u32)) -> f64 {
        let max = self.max_abs();
        match self.cells.get(&cell) {
            Some(v) if max != Ratio::from_integer(0) => diff_f64(&(v / max)),
            _ => 0.0,
        }
    }
}

pub(crate) fn freq_f64(r: &Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

pub(crate) fn diff_f64(r: &Ratio<i128>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Stop events per stop whose arrival lies in `window`, over trips of
/// `service_ids`. Every stop of the feed appears, unvisited ones with 0.
pub fn stop_visit_counts<S: AsRef<str>>(
    feed: &Feed,
    service_ids: &[S],
    window: TimeWindow,
) -> Result<BTreeMap<String, u64>> {
    let expanded;
    let feed = if feed.frequencies.as_ref().is_some_and(|f| !f.is_empty()) {
        expanded = expand_frequencies(feed)?;
        &expanded
    } else {
        feed
    };
    let trips: std::collections::HashSet<&str> = trips_for_services(feed, service_ids)?.into_iter().collect();
    let mut counts: BTreeMap<String, u64> = feed.stops.iter().map(|s| (s.stop_id.clone(), 0)).collect();
    for st in &feed.stop_times {
        if window.contains(st.arrival_s) && trips.contains(st.trip_id.as_str()) {
            *counts.entry(st.stop_id.clone()).or_default() += 1;
        }
    }
    Ok(counts)
}

/// Aggregates [`stop_visit_counts`] into the cells of `spec`.
pub fn grid_frequency<S: AsRef<str>>(
    feed: &Feed,
    service_ids: &[S],
    spec: GridSpec,
    window: TimeWindow,
) -> Result<GridFrequencyMap> {
    spec.check()?;
    let visits = stop_visit_counts(feed, service_ids, window)?;
    let mut acc: HashMap<(u32, u32), (u32, u64)> = HashMap::new();
    for stop in &feed.stops {
        let cell = spec
            .cell_of(GeoPoint::new(stop.lat, stop.lon))
            .ok_or_else(|| AnalysisError::StopOutsideGrid(stop.stop_id.clone()))?;
        let e = acc.entry(cell).or_default();
        e.0 += 1;
        e.1 += visits.get(&stop.stop_id).copied().unwrap_or(0);
    }
    let window_s = u64::from(window.duration_s());
    let cells = acc
        .into_iter()
        .map(|((row, col), (stop_count, visit_count))| {
            let avg_frequency = Ratio::new(visit_count * 3600, u64::from(stop_count) * window_s);
            ((row, col), CellStat { row, col, stop_count, visit_count, avg_frequency })
        })
        .collect();
    Ok(GridFrequencyMap { spec, window, label: String::new(), cells })
}

/// Cellwise `b − a`. Cells missing from one side count as 0 there.
pub fn grid_diff(a: &GridFrequencyMap, b: &GridFrequencyMap) -> Result<GridDiff> {
    if a.spec != b.spec {
        return Err(AnalysisError::GridMismatch);
    }
    let mut warnings = Vec::new();
    if a.window.duration_s() != b.window.duration_s() {
        warnings.push(format!(
            "windows differ in length ({} s vs {} s); frequencies are per hour but service patterns may not compare",
            a.window.duration_s(),
            b.window.duration_s()
        ));
    }
    let widen = |r: &Ratio<u64>| Ratio::new(i128::from(*r.numer()), i128::from(*r.denom()));
    let zero = Ratio::from_integer(0);
    let mut cells = BTreeMap::new();
    for key in a.cells.keys().chain(b.cells.keys()) {
        let va = a.cells.get(key).map_or(zero, |c| widen(&c.avg_frequency));
        let vb = b.cells.get(key).map_or(zero, |c| widen(&c.avg_frequency));
        cells.insert(*key, vb - va);
    }
    Ok(GridDiff {
        spec: a.spec,
        window_a: a.window,
        window_b: b.window,
        label_a: a.label.clone(),
        label_b: b.label.clone(),
        cells,
        warnings,
    })
}
