//! HTTP service for the upload → inspect → build → isochrone → profile
//! workflow. State lives in per-session memory; feed parsing and network
//! builds run as background jobs polled through `JobStatus`.

mod session;

use std::sync::Arc;
use std::time::Duration;

use axum::extract::{DefaultBodyLimit, Multipart, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use gtfs2stn_core::analysis::{AnalysisError, TimeWindow};
use gtfs2stn_core::geo::GeoPoint;
use gtfs2stn_core::gtfs::time::{parse_clock, parse_window};
use gtfs2stn_core::gtfs::{
    load_feed_from_zip_bytes, shapes_geojson, stops_geojson, table_page, trips_for_services, validate, GtfsError,
};
use gtfs2stn_core::network::{build_network, serialize_network, BuildConfig, NetworkError};
use gtfs2stn_core::router::{Direction, QueryEndpoint, RouteError};
use serde::Deserialize;
use serde_json::{json, Value};
use uuid::Uuid;

use session::{finish, set_phase, sweep_interval};
pub use session::{AppState, JobKind, JobPhase, JobStatus};

use crate::ops::{self, IsochroneParams, ProfileFormat, ProfileParams};

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub session_ttl: Duration,
    pub upload_cap_bytes: usize,
    /// Rows per table preview page.
    pub page_size: usize,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig { session_ttl: Duration::from_secs(3600), upload_cap_bytes: 256 * 1024 * 1024, page_size: 1000 }
    }
}

/// An error response: a status and a `{"error": ...}` body.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError { status, message: message.into() }
    }
    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, message)
    }
    pub fn conflict(message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, message)
    }
    pub fn invalid(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({"error": self.message}))).into_response()
    }
}

impl From<RouteError> for ApiError {
    fn from(e: RouteError) -> Self {
        match e {
            RouteError::NoSuchStop(_) => ApiError::not_found(e.to_string()),
            _ => ApiError::invalid(e.to_string()),
        }
    }
}

impl From<AnalysisError> for ApiError {
    fn from(e: AnalysisError) -> Self {
        ApiError::invalid(e.to_string())
    }
}

impl From<GtfsError> for ApiError {
    fn from(e: GtfsError) -> Self {
        ApiError::invalid(e.to_string())
    }
}

impl From<NetworkError> for ApiError {
    fn from(e: NetworkError) -> Self {
        ApiError::invalid(e.to_string())
    }
}

type Shared = Arc<AppState>;
type ApiResult<T> = Result<T, ApiError>;

fn session_id(text: &str) -> ApiResult<Uuid> {
    text.parse().map_err(|_| ApiError::not_found(format!("unknown session {text}")))
}

fn geojson(doc: String) -> Response {
    ([(header::CONTENT_TYPE, "application/geo+json")], doc).into_response()
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
}

pub fn router(state: Shared) -> Router {
    let cap = state.config.upload_cap_bytes;
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session).delete(delete_session))
        .route("/sessions/{id}/jobs/{job}", get(get_job))
        .route("/sessions/{id}/feed", post(upload_feed).get(feed_summary))
        .route("/sessions/{id}/feed/tables", get(feed_tables))
        .route("/sessions/{id}/feed/tables/{name}", get(feed_table))
        .route("/sessions/{id}/feed/stops.geojson", get(feed_stops))
        .route("/sessions/{id}/feed/shapes.geojson", get(feed_shapes))
        .route("/sessions/{id}/network", post(start_build).get(network_info))
        .route("/sessions/{id}/network/download", get(network_download))
        .route("/sessions/{id}/isochrone", post(isochrone))
        .route("/sessions/{id}/profile", post(profile))
        .route("/sessions/{id}/grid", post(grid))
        .route("/sessions/{id}/grid/diff", post(grid_diff))
        .layer(DefaultBodyLimit::max(cap))
        .with_state(state)
}

pub fn app(config: ServerConfig) -> (Router, Shared) {
    let state = Arc::new(AppState::new(config));
    (router(state.clone()), state)
}

pub async fn serve(bind: &str, config: ServerConfig) -> anyhow::Result<()> {
    let _ = tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .try_init();
    let (app, state) = app(config);
    let every = sweep_interval(state.config.session_ttl);
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(every);
        loop {
            tick.tick().await;
            let n = state.sweep();
            if n > 0 {
                tracing::info!(expired = n, "dropped idle sessions");
            }
        }
    });
    let listener = tokio::net::TcpListener::bind(bind).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

async fn create_session(State(st): State<Shared>) -> impl IntoResponse {
    let id = st.create();
    (StatusCode::CREATED, Json(json!({"session_id": id, "ttl_s": st.config.session_ttl.as_secs()})))
}

async fn get_session(State(st): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let id = session_id(&id)?;
    st.with(id, |s| {
        let mut jobs: Vec<&JobStatus> = s.jobs.values().collect();
        jobs.sort_by_key(|j| j.job_id);
        Ok(Json(json!({
            "session_id": id,
            "created_at_s": s.created_at_s(),
            "has_feed": s.feed.is_some(),
            "has_network": s.network.is_some(),
            "build_config": s.build_config,
            "running_job": s.running,
            "jobs": jobs,
        })))
    })
}

async fn delete_session(State(st): State<Shared>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    let id = session_id(&id)?;
    if st.remove(id) {
        Ok(StatusCode::NO_CONTENT)
    } else {
        Err(ApiError::not_found(format!("unknown session {id}")))
    }
}

async fn get_job(State(st): State<Shared>, Path((id, job)): Path<(String, String)>) -> ApiResult<Json<JobStatus>> {
    let id = session_id(&id)?;
    st.with(id, |s| {
        job.parse::<Uuid>()
            .ok()
            .and_then(|j| s.jobs.get(&j).cloned())
            .map(Json)
            .ok_or_else(|| ApiError::not_found(format!("unknown job {job}")))
    })
}

async fn upload_feed(
    State(st): State<Shared>,
    Path(id): Path<String>,
    mut form: Multipart,
) -> ApiResult<(StatusCode, Json<JobStatus>)> {
    let id = session_id(&id)?;
    st.with(id, |_| Ok(()))?;
    let mut bytes = None;
    while let Some(field) = form.next_field().await.map_err(|e| ApiError::new(e.status(), e.body_text()))? {
        let is_file = field.name() == Some("file") || field.file_name().is_some();
        let data = field.bytes().await.map_err(|e| ApiError::new(e.status(), e.body_text()))?;
        if is_file || bytes.is_none() {
            bytes = Some(data);
        }
    }
    let bytes = bytes.ok_or_else(|| ApiError::invalid("multipart body has no file field"))?;
    let job = st.with(id, |s| s.start_job(JobKind::Feed))?;
    let job_id = job.job_id;
    let state = st.clone();
    tokio::spawn(async move {
        set_phase(&state, id, job_id, JobPhase::Parsing, 0.1);
        let parsed = tokio::task::spawn_blocking(move || {
            let feed = load_feed_from_zip_bytes(&bytes).map_err(|e| e.to_string())?;
            let report = validate(&feed);
            if let Some(first) = report.errors.iter().find(|f| f.severity == gtfs2stn_core::gtfs::Severity::Fatal) {
                return Err(format!(
                    "{} fatal validation errors; first: {} {}",
                    report.fatal_count(),
                    first.table,
                    first.message
                ));
            }
            Ok(feed)
        })
        .await
        .unwrap_or_else(|e| Err(e.to_string()));
        match &parsed {
            Ok(f) => tracing::info!(session = %id, stops = f.stops.len(), "feed loaded"),
            Err(e) => tracing::warn!(session = %id, "feed rejected: {e}"),
        }
        finish(
            &state,
            id,
            job_id,
            parsed.map(|feed| {
                move |s: &mut session::Session| {
                    s.feed = Some(Arc::new(feed));
                    s.network = None;
                    s.build_config = None;
                }
            }),
        );
    });
    Ok((StatusCode::ACCEPTED, Json(job)))
}

async fn feed_summary(State(st): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let feed = st.with(session_id(&id)?, |s| s.feed())?;
    let report = blocking(move || Ok(validate(&feed))).await?;
    let feed = st.with(session_id(&id)?, |s| s.feed())?;
    Ok(Json(json!({
        "counts": report.counts,
        "service_ids": feed.service_ids(),
        "findings": report.errors,
    })))
}

async fn feed_tables(State(st): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let feed = st.with(session_id(&id)?, |s| s.feed())?;
    Ok(Json(json!(feed.table_counts())))
}

#[derive(Debug, Deserialize)]
struct PageQuery {
    #[serde(default)]
    page: usize,
}

async fn feed_table(
    State(st): State<Shared>,
    Path((id, name)): Path<(String, String)>,
    Query(q): Query<PageQuery>,
) -> ApiResult<Json<Value>> {
    let feed = st.with(session_id(&id)?, |s| s.feed())?;
    let size = st.config.page_size;
    let page = blocking(move || {
        table_page(&feed, &name, q.page, size).ok_or_else(|| ApiError::not_found(format!("no table {name}")))
    })
    .await?;
    Ok(Json(json!(page)))
}

async fn feed_stops(State(st): State<Shared>, Path(id): Path<String>) -> ApiResult<Response> {
    let feed = st.with(session_id(&id)?, |s| s.feed())?;
    Ok(geojson(stops_geojson(&feed).to_string()))
}

async fn feed_shapes(State(st): State<Shared>, Path(id): Path<String>) -> ApiResult<Response> {
    let feed = st.with(session_id(&id)?, |s| s.feed())?;
    Ok(geojson(shapes_geojson(&feed).to_string()))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BuildRequest {
    service_ids: Vec<String>,
    max_walk_m: Option<f64>,
    walk_speed_mps: Option<f64>,
}

async fn start_build(
    State(st): State<Shared>,
    Path(id): Path<String>,
    Json(req): Json<BuildRequest>,
) -> ApiResult<(StatusCode, Json<JobStatus>)> {
    let id = session_id(&id)?;
    let mut cfg = BuildConfig::new(req.service_ids.clone());
    cfg.max_walk_m = req.max_walk_m.unwrap_or(cfg.max_walk_m);
    cfg.walk_speed_mps = req.walk_speed_mps.unwrap_or(cfg.walk_speed_mps);
    let (feed, job) = st.with(id, |s| {
        let feed = s.feed()?;
        cfg.check()?;
        trips_for_services(&feed, &req.service_ids)?;
        Ok((feed, s.start_job(JobKind::Network)?))
    })?;
    let job_id = job.job_id;
    let state = st.clone();
    tokio::spawn(async move {
        set_phase(&state, id, job_id, JobPhase::Building, 0.1);
        let c = cfg.clone();
        let built = tokio::task::spawn_blocking(move || build_network(&feed, &c).map_err(|e| e.to_string()))
            .await
            .unwrap_or_else(|e| Err(e.to_string()));
        match &built {
            Ok(n) => tracing::info!(session = %id, nodes = n.nodes().len(), links = n.links().len(), "network built"),
            Err(e) => tracing::warn!(session = %id, "build failed: {e}"),
        }
        finish(
            &state,
            id,
            job_id,
            built.map(|net| {
                move |s: &mut session::Session| {
                    s.network = Some(Arc::new(net));
                    s.build_config = Some(cfg);
                }
            }),
        );
    });
    Ok((StatusCode::ACCEPTED, Json(job)))
}

async fn network_info(State(st): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let sid = session_id(&id)?;
    st.with(sid, |s| {
        let net = s.network()?;
        Ok(Json(json!({
            "stats": net.stats(),
            "build_config": s.build_config,
            "format_version": gtfs2stn_core::network::FORMAT_VERSION,
            "download": format!("/sessions/{sid}/network/download"),
        })))
    })
}

async fn network_download(State(st): State<Shared>, Path(id): Path<String>) -> ApiResult<Response> {
    let net = st.with(session_id(&id)?, |s| s.network())?;
    let bytes = blocking(move || Ok(serialize_network(&net))).await?;
    Ok((
        [
            (header::CONTENT_TYPE, "application/octet-stream"),
            (header::CONTENT_DISPOSITION, "attachment; filename=\"network.stn\""),
        ],
        bytes,
    )
        .into_response())
}

/// A stop id, a `"lat,lon"` string, or `{"lat": .., "lon": ..}`.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum EndpointInput {
    Text(String),
    Point(GeoPoint),
}

impl From<EndpointInput> for QueryEndpoint {
    fn from(e: EndpointInput) -> Self {
        match e {
            EndpointInput::Text(t) => t.parse().expect("infallible"),
            EndpointInput::Point(p) => QueryEndpoint::Coord(p),
        }
    }
}

/// `"HH:MM:SS"` (or `"HH:MM"`) or integer seconds.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum TimeInput {
    Seconds(u32),
    Text(String),
}

impl TimeInput {
    fn seconds(&self) -> ApiResult<u32> {
        match self {
            TimeInput::Seconds(s) => Ok(*s),
            TimeInput::Text(t) => Ok(parse_clock(t)?),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct IsochroneRequest {
    origins: Vec<EndpointInput>,
    depart: Option<TimeInput>,
    arrive: Option<TimeInput>,
    cutoff_s: u32,
    bands: Option<Vec<u32>>,
    direction: Option<Direction>,
}

impl IsochroneRequest {
    /// `arrive` implies a reverse query unless `direction` says otherwise.
    fn into_params(self) -> ApiResult<IsochroneParams> {
        let (time, implied) = match (&self.depart, &self.arrive) {
            (Some(t), None) => (t, Direction::Forward),
            (None, Some(t)) => (t, Direction::Reverse),
            _ => return Err(ApiError::invalid("give exactly one of `depart` and `arrive`")),
        };
        Ok(IsochroneParams {
            time_s: time.seconds()?,
            endpoints: self.origins.into_iter().map(Into::into).collect(),
            direction: self.direction.unwrap_or(implied),
            cutoff_s: self.cutoff_s,
            bands_s: self.bands,
        })
    }
}

async fn isochrone(
    State(st): State<Shared>,
    Path(id): Path<String>,
    Json(req): Json<IsochroneRequest>,
) -> ApiResult<Response> {
    let net = st.with(session_id(&id)?, |s| s.network())?;
    let params = req.into_params()?;
    let doc = blocking(move || Ok(ops::isochrone_document(&net, &params)?)).await?;
    Ok(geojson(doc))
}

/// `"06:00-22:00"` or `{"start": .., "end": ..}`.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum WindowInput {
    Text(String),
    Range { start: TimeInput, end: TimeInput },
}

/// `"10m"`-style text or integer seconds.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum StepInput {
    Seconds(u32),
    Text(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileRequest {
    origin: EndpointInput,
    #[serde(alias = "destination")]
    dest: EndpointInput,
    window: WindowInput,
    step: StepInput,
}

#[derive(Debug, Deserialize)]
struct FormatQuery {
    format: Option<ProfileFormat>,
}

async fn profile(
    State(st): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<FormatQuery>,
    Json(req): Json<ProfileRequest>,
) -> ApiResult<Response> {
    let net = st.with(session_id(&id)?, |s| s.network())?;
    let (start_s, end_s) = match &req.window {
        WindowInput::Text(t) => parse_window(t)?,
        WindowInput::Range { start, end } => (start.seconds()?, end.seconds()?),
    };
    let step_s = match &req.step {
        StepInput::Seconds(s) => *s,
        StepInput::Text(t) => ops::parse_step(t).map_err(ApiError::invalid)?,
    };
    let params = ProfileParams { origin: req.origin.into(), destination: req.dest.into(), start_s, end_s, step_s };
    let format = q.format.unwrap_or(ProfileFormat::Json);
    let doc = blocking(move || Ok(ops::profile_document(&ops::profile(&net, &params)?, format))).await?;
    Ok(([(header::CONTENT_TYPE, format.content_type())], doc).into_response())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridRequest {
    service_ids: Vec<String>,
    cell_deg: f64,
    window: String,
    #[serde(default)]
    label: String,
}

async fn grid(State(st): State<Shared>, Path(id): Path<String>, Json(req): Json<GridRequest>) -> ApiResult<Response> {
    let feed = st.with(session_id(&id)?, |s| s.feed())?;
    let (start, end) = parse_window(&req.window)?;
    let window = TimeWindow::new(start, end)?;
    let doc =
        blocking(move || Ok(ops::grid_document(&feed, &req.service_ids, req.cell_deg, window, &req.label)?)).await?;
    Ok(geojson(doc))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridDiffRequest {
    a: Value,
    b: Value,
}

async fn grid_diff(
    State(st): State<Shared>,
    Path(id): Path<String>,
    Json(req): Json<GridDiffRequest>,
) -> ApiResult<Response> {
    st.with(session_id(&id)?, |_| Ok(()))?;
    let doc = blocking(move || Ok(ops::grid_diff_document(&req.a.to_string(), &req.b.to_string())?)).await?;
    Ok(geojson(doc))
}
