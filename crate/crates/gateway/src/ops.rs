//! Operations shared by the CLI and the HTTP service. Both surfaces parse
//! their inputs into these parameter types and emit the documents produced
//! here, so identical parameters give byte-identical output.

use gtfs2stn_core::analysis::{self, map_geojson, GridSpec, TimeWindow};
use gtfs2stn_core::geo::GeoPoint;
use gtfs2stn_core::gtfs::Feed;
use gtfs2stn_core::network::Network;
use gtfs2stn_core::router::{
    isochrone, isochrone_geojson, journey_profile, profile_table, Direction, HyperNode, IsochroneQuery, JourneyProfile,
    QueryEndpoint, RouteError,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq)]
pub struct IsochroneParams {
    pub endpoints: Vec<QueryEndpoint>,
    /// Departure time, or the arrive-by deadline when `direction` is reverse.
    pub time_s: u32,
    pub direction: Direction,
    pub cutoff_s: u32,
    /// `None` picks the default 20-minute bands.
    pub bands_s: Option<Vec<u32>>,
}

impl IsochroneParams {
    pub fn query(&self) -> IsochroneQuery {
        let hyper = HyperNode { direction: self.direction, endpoints: self.endpoints.clone(), anchor_s: self.time_s };
        let q = IsochroneQuery::new(hyper, self.cutoff_s);
        match &self.bands_s {
            Some(b) => q.with_bands(b.clone()),
            None => q,
        }
    }
}

pub fn isochrone_document(net: &Network, p: &IsochroneParams) -> Result<String, RouteError> {
    Ok(isochrone_geojson(&isochrone(net, &p.query())?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileParams {
    pub origin: QueryEndpoint,
    pub destination: QueryEndpoint,
    pub start_s: u32,
    pub end_s: u32,
    pub step_s: u32,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ProfileFormat {
    /// Comma-separated table, one row per sample.
    #[default]
    Csv,
    /// The full profile with legs.
    Json,
}

impl ProfileFormat {
    pub fn content_type(self) -> &'static str {
        match self {
            ProfileFormat::Csv => "text/csv; charset=utf-8",
            ProfileFormat::Json => "application/json",
        }
    }
}

pub fn profile(net: &Network, p: &ProfileParams) -> Result<JourneyProfile, RouteError> {
    journey_profile(net, &p.origin, &p.destination, p.start_s, p.end_s, p.step_s)
}

pub fn profile_document(profile: &JourneyProfile, format: ProfileFormat) -> String {
    match format {
        ProfileFormat::Csv => profile_table(profile),
        ProfileFormat::Json => serde_json::to_string_pretty(profile).expect("profile serializes") + "\n",
    }
}

/// Grid frequency over a grid snapped to cover every stop of the feed.
pub fn grid_document(
    feed: &Feed,
    services: &[String],
    cell_deg: f64,
    window: TimeWindow,
    label: &str,
) -> Result<String, analysis::AnalysisError> {
    let spec = GridSpec::covering(feed.stops.iter().map(|s| GeoPoint::new(s.lat, s.lon)), cell_deg)?;
    let map = analysis::grid_frequency(feed, services, spec, window)?.with_label(label);
    Ok(map_geojson(&map))
}

pub fn grid_diff_document(a: &str, b: &str) -> Result<String, analysis::AnalysisError> {
    let (a, b) = (analysis::map_from_geojson(a)?, analysis::map_from_geojson(b)?);
    Ok(analysis::diff_geojson(&analysis::grid_diff(&a, &b)?))
}

/// Parses a step such as `10m`, `90s`, `1h` or plain seconds.
pub fn parse_step(text: &str) -> Result<u32, String> {
    let t = text.trim();
    let (num, mult) = match t.char_indices().last() {
        Some((i, 'h')) => (&t[..i], 3600),
        Some((i, 'm')) => (&t[..i], 60),
        Some((i, 's')) => (&t[..i], 1),
        _ => (t, 1),
    };
    let n: u32 = num.parse().map_err(|_| format!("bad step `{text}`"))?;
    n.checked_mul(mult).filter(|&s| s > 0).ok_or_else(|| format!("bad step `{text}`"))
}
