//! HTTP session service for the live experiment.
//!
//! The server draws every random quantity, so a client only renders what it
//! is sent and posts answers. Requests for one session are serialized by a
//! per-session lock; sessions share nothing but the registry.

pub mod config;
pub mod session;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex as StdMutex};
use std::time::Instant;

use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use resqu_core::simulator::stream_seed;
use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;

pub use config::{ConditionSpec, OrderSpec, Rendering, ServiceConfig};
pub use session::{
    Plan, QuestionnaireItems, QuestionnaireReply, ResponseReply, ResponseRequest, Session, SessionError,
    SessionReport, Stimulus,
};

/// An error status with a JSON `{"error": ...}` body.
#[derive(Debug)]
pub struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(serde_json::json!({ "error": self.1 }))).into_response()
    }
}

impl From<SessionError> for ApiError {
    fn from(err: SessionError) -> Self {
        let status = match err {
            SessionError::Conflict(_) => StatusCode::CONFLICT,
            SessionError::Gone(_) => StatusCode::GONE,
            SessionError::Invalid(_) => StatusCode::UNPROCESSABLE_ENTITY,
            SessionError::Storage(_) | SessionError::Corrupt(..) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, err.to_string())
    }
}

type Shared = Arc<Mutex<Session>>;

struct Inner {
    config: ServiceConfig,
    root: PathBuf,
    sessions: StdMutex<HashMap<String, Shared>>,
    created: AtomicUsize,
}

/// Registry of sessions backed by `<data-dir>/sessions/<id>/`.
#[derive(Clone)]
pub struct AppState(Arc<Inner>);

impl AppState {
    /// Opens the data directory and replays every session in it.
    pub fn open(config: ServiceConfig, data_dir: &Path) -> anyhow::Result<Self> {
        config.validate().map_err(anyhow::Error::msg)?;
        let root = data_dir.join("sessions");
        std::fs::create_dir_all(&root)?;
        let mut sessions = HashMap::new();
        for entry in std::fs::read_dir(&root)? {
            let dir = entry?.path();
            if dir.is_dir() {
                let s = Session::load(dir)?;
                sessions.insert(s.id().to_string(), Arc::new(Mutex::new(s)));
            }
        }
        let created = AtomicUsize::new(sessions.len());
        Ok(Self(Arc::new(Inner {
            config,
            root,
            sessions: StdMutex::new(sessions),
            created,
        })))
    }

    pub fn session_count(&self) -> usize {
        self.0.sessions.lock().expect("registry lock").len()
    }

    fn get(&self, id: &str) -> Result<Shared, ApiError> {
        self.0
            .sessions
            .lock()
            .expect("registry lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("unknown session {id}")))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateRequest {
    pub participant_id: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateReply {
    pub session_id: String,
    pub plan: Plan,
}

async fn create(State(state): State<AppState>, Json(req): Json<CreateRequest>) -> Result<Json<CreateReply>, ApiError> {
    if req.participant_id.trim().is_empty() {
        return Err(ApiError(StatusCode::UNPROCESSABLE_ENTITY, "participant_id is empty".into()));
    }
    let inner = &state.0;
    let n = inner.created.fetch_add(1, Ordering::SeqCst);
    let plan = Plan::from_config(&inner.config, n % inner.config.orders.len());
    let key = match inner.config.seed {
        Some(seed) => stream_seed(seed, &[n as u64]),
        None => rand::random(),
    };
    let session_id = uuid::Uuid::new_v4().to_string();
    let session = Session::create(inner.root.join(&session_id), session_id.clone(), req.participant_id, key, plan.clone())
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, format!("storage: {e}")))?;
    inner
        .sessions
        .lock()
        .expect("registry lock")
        .insert(session_id.clone(), Arc::new(Mutex::new(session)));
    Ok(Json(CreateReply { session_id, plan }))
}

async fn next(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Json<Stimulus>, ApiError> {
    let session = state.get(&id)?;
    let mut s = session.lock().await;
    Ok(Json(s.next(Instant::now())?))
}

async fn respond(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Json(req): Json<ResponseRequest>,
) -> Result<Json<ResponseReply>, ApiError> {
    let session = state.get(&id)?;
    let mut s = session.lock().await;
    Ok(Json(s.respond(req, Instant::now())?))
}

async fn questionnaire(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Json(items): Json<QuestionnaireItems>,
) -> Result<Json<QuestionnaireReply>, ApiError> {
    let session = state.get(&id)?;
    let mut s = session.lock().await;
    Ok(Json(s.submit_questionnaire(items)?))
}

async fn report(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Json<SessionReport>, ApiError> {
    let session = state.get(&id)?;
    let s = session.lock().await;
    Ok(Json(s.report()?))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/sessions", post(create))
        .route("/api/sessions/{id}/next", get(next))
        .route("/api/sessions/{id}/responses", post(respond))
        .route("/api/sessions/{id}/questionnaire", post(questionnaire))
        .route("/api/sessions/{id}/report", get(report))
        .with_state(state)
}

/// Serves until Ctrl-C.
pub async fn serve(state: AppState, addr: SocketAddr) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!(
        "serving {} session(s) from {} on http://{}",
        state.session_count(),
        state.0.root.display(),
        listener.local_addr()?
    );
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            tokio::signal::ctrl_c().await.ok();
        })
        .await?;
    Ok(())
}
