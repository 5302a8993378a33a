//! Session store and background jobs.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use gtfs2stn_core::gtfs::Feed;
use gtfs2stn_core::network::{BuildConfig, Network};
use serde::Serialize;
use uuid::Uuid;

use super::{ApiError, ServerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum JobKind {
    Feed,
    Network,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum JobPhase {
    Queued,
    Parsing,
    Building,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JobStatus {
    pub job_id: Uuid,
    pub kind: JobKind,
    pub phase: JobPhase,
    pub progress: f64,
    pub message: Option<String>,
}

pub struct Session {
    pub feed: Option<Arc<Feed>>,
    pub network: Option<Arc<Network>>,
    pub build_config: Option<BuildConfig>,
    pub created_at: SystemTime,
    last_access: Instant,
    pub jobs: HashMap<Uuid, JobStatus>,
    /// The one mutating job allowed at a time.
    pub running: Option<Uuid>,
}

impl Session {
    fn new() -> Self {
        Session {
            feed: None,
            network: None,
            build_config: None,
            created_at: SystemTime::now(),
            last_access: Instant::now(),
            jobs: HashMap::new(),
            running: None,
        }
    }

    pub fn created_at_s(&self) -> u64 {
        self.created_at.duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
    }

    pub fn feed(&self) -> Result<Arc<Feed>, ApiError> {
        self.feed.clone().ok_or_else(|| ApiError::conflict("no feed uploaded"))
    }

    pub fn network(&self) -> Result<Arc<Network>, ApiError> {
        self.network.clone().ok_or_else(|| ApiError::conflict("network not built"))
    }

    /// Registers a new job, or 409 if one is already running.
    pub fn start_job(&mut self, kind: JobKind) -> Result<JobStatus, ApiError> {
        if let Some(id) = self.running {
            return Err(ApiError::conflict(format!("job {id} is still running")));
        }
        let job = JobStatus { job_id: Uuid::new_v4(), kind, phase: JobPhase::Queued, progress: 0.0, message: None };
        self.running = Some(job.job_id);
        self.jobs.insert(job.job_id, job.clone());
        Ok(job)
    }
}

pub struct AppState {
    pub config: ServerConfig,
    sessions: Mutex<HashMap<Uuid, Session>>,
}

impl AppState {
    pub fn new(config: ServerConfig) -> Self {
        AppState { config, sessions: Mutex::new(HashMap::new()) }
    }

    pub fn create(&self) -> Uuid {
        let id = Uuid::new_v4();
        self.sessions.lock().unwrap().insert(id, Session::new());
        id
    }

    pub fn remove(&self, id: Uuid) -> bool {
        self.sessions.lock().unwrap().remove(&id).is_some()
    }

    fn expired(&self, s: &Session, now: Instant) -> bool {
        now.duration_since(s.last_access) > self.config.session_ttl
    }

    /// Runs `f` on a live session and refreshes its idle timer. Expired
    /// sessions are dropped and reported as unknown.
    pub fn with<R>(&self, id: Uuid, f: impl FnOnce(&mut Session) -> Result<R, ApiError>) -> Result<R, ApiError> {
        let mut map = self.sessions.lock().unwrap();
        let now = Instant::now();
        if map.get(&id).is_some_and(|s| self.expired(s, now)) {
            map.remove(&id);
        }
        let s = map.get_mut(&id).ok_or_else(|| ApiError::not_found(format!("unknown session {id}")))?;
        s.last_access = now;
        f(s)
    }

    /// Like [`AppState::with`] but neither refreshes the timer nor fails
    /// when the session is gone; used by background jobs.
    pub fn update(&self, id: Uuid, f: impl FnOnce(&mut Session)) {
        if let Some(s) = self.sessions.lock().unwrap().get_mut(&id) {
            f(s);
        }
    }

    pub fn sweep(&self) -> usize {
        let now = Instant::now();
        let mut map = self.sessions.lock().unwrap();
        let before = map.len();
        map.retain(|_, s| !self.expired(s, now));
        before - map.len()
    }

    pub fn len(&self) -> usize {
        self.sessions.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Moves a job to `phase` if it is still the session's running job.
pub fn set_phase(state: &AppState, session: Uuid, job: Uuid, phase: JobPhase, progress: f64) {
    state.update(session, |s| {
        if let Some(j) = s.jobs.get_mut(&job) {
            if j.phase < phase {
                j.phase = phase;
                j.progress = progress;
            }
        }
    });
}

/// Ends a job. On success `commit` applies the result to the session; on
/// failure the session keeps its pre-job state.
pub fn finish(state: &AppState, session: Uuid, job: Uuid, outcome: Result<impl FnOnce(&mut Session), String>) {
    state.update(session, |s| {
        if s.running == Some(job) {
            s.running = None;
        }
        let message = match outcome {
            Ok(commit) => {
                commit(s);
                None
            }
            Err(m) => Some(m),
        };
        if let Some(j) = s.jobs.get_mut(&job) {
            j.phase = if message.is_some() { JobPhase::Failed } else { JobPhase::Done };
            j.progress = 1.0;
            j.message = message;
        }
    });
}

pub fn sweep_interval(ttl: Duration) -> Duration {
    ttl.clamp(Duration::from_secs(1), Duration::from_secs(60))
}
