//! HTTP API over the store and the in-memory session table.
//!
//! Each session sits behind its own async mutex, so events for one session
//! are applied in arrival order while other sessions proceed independently.
//! Every applied event is appended to the session's log in the store; on
//! start-up the table is rebuilt by replaying those logs.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use signcoach_core::driver::{DriverError, SessionDriver};
use signcoach_core::feedback::{lesson_feedback, FeedbackEnvelope, FeedbackMode};
use signcoach_core::format::{parse_json, SchemaViolation};
use signcoach_core::pipeline::{PipelineConfig, PipelineError};
use signcoach_core::session::{SessionConfig, SessionError, SessionEvent, SessionLog, SessionState};
use tokio::sync::Mutex;

use crate::store::{Collection, Store, StoreError};

/// Settings shared by every session the service runs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ServiceConfig {
    pub pipeline: PipelineConfig,
    pub session: SessionConfig,
}

type SessionHandle = Arc<Mutex<SessionDriver>>;

pub struct AppState {
    store: Arc<Store>,
    cfg: ServiceConfig,
    sessions: RwLock<HashMap<String, SessionHandle>>,
}

/// A session log that could not be replayed at start-up.
#[derive(Debug, Clone, PartialEq)]
pub struct SkippedSession {
    pub id: String,
    pub reason: String,
}

impl AppState {
    /// Loads every stored session by replaying its log.
    pub fn open(store: Arc<Store>, cfg: ServiceConfig) -> Result<(Arc<AppState>, Vec<SkippedSession>), StoreError> {
        let mut sessions = HashMap::new();
        let mut skipped = Vec::new();
        for id in store.list(Collection::Sessions)? {
            match resume(&store, &cfg, &id) {
                Ok(driver) => {
                    sessions.insert(id, Arc::new(Mutex::new(driver)));
                }
                Err(e) => skipped.push(SkippedSession { id, reason: e.message }),
            }
        }
        let state = AppState {
            store,
            cfg,
            sessions: RwLock::new(sessions),
        };
        Ok((Arc::new(state), skipped))
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    fn session(&self, id: &str) -> Result<SessionHandle, ApiError> {
        self.sessions
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("sessions", id))
    }
}

fn resume(store: &Store, cfg: &ServiceConfig, id: &str) -> Result<SessionDriver, ApiError> {
    let log = SessionLog::parse(&store.get(Collection::Sessions, id)?).map_err(DriverError::from)?;
    let templates = store.lesson_templates(&log.lesson)?;
    Ok(SessionDriver::resume(
        log,
        templates,
        store.library()?,
        cfg.pipeline.clone(),
        cfg.session.clone(),
    )?)
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/lessons", get(list_lessons))
        .route("/api/lessons/{id}", get(get_lesson))
        .route("/api/templates/{id}", get(get_template))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}", get(get_session))
        .route("/api/sessions/{id}/events", post(post_event))
        .route("/api/sessions/{id}/result/{n}", get(get_result))
        .route("/api/feedback/{session}/{n}", get(get_feedback))
        .with_state(state)
}

/// Serves until the process receives Ctrl-C.
pub async fn serve(listener: tokio::net::TcpListener, state: Arc<AppState>) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

/// Binds `addr` and serves in the background; returns the bound address.
pub async fn spawn(addr: SocketAddr, state: Arc<AppState>) -> std::io::Result<SocketAddr> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    tokio::spawn(async move { axum::serve(listener, router(state)).await });
    Ok(local)
}

/// Error body: `{ "code", "message", "detail" }`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub detail: Value,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    code: &'a str,
    message: &'a str,
    detail: &'a Value,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>, detail: Value) -> ApiError {
        ApiError {
            status,
            code,
            message: message.into(),
            detail,
        }
    }

    fn not_found(collection: &str, id: &str) -> ApiError {
        ApiError::new(
            StatusCode::NOT_FOUND,
            "NotFound",
            format!("{collection} `{id}` not found"),
            json!({ "collection": collection, "id": id }),
        )
    }

    fn schema(v: SchemaViolation) -> ApiError {
        ApiError::new(
            StatusCode::BAD_REQUEST,
            "SchemaViolation",
            v.to_string(),
            json!({ "path": v.path, "reason": v.reason }),
        )
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            code: self.code,
            message: &self.message,
            detail: &self.detail,
        };
        (self.status, Json(body)).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> ApiError {
        match e {
            StoreError::NotFound { collection, ref id } => ApiError::not_found(collection, id),
            StoreError::Conflict { collection, ref id } => ApiError::new(
                StatusCode::CONFLICT,
                "Conflict",
                e.to_string(),
                json!({ "collection": collection, "id": id }),
            ),
            StoreError::Schema(v) => ApiError::schema(v),
            StoreError::InvalidId(ref id) => {
                ApiError::new(StatusCode::BAD_REQUEST, "InvalidId", e.to_string(), json!({ "id": id }))
            }
            StoreError::Io(_) => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string(), Value::Null),
        }
    }
}

impl From<DriverError> for ApiError {
    fn from(e: DriverError) -> ApiError {
        let message = e.to_string();
        match e {
            DriverError::Session(SessionError::IllegalEvent { phase, event }) => ApiError::new(
                StatusCode::CONFLICT,
                "IllegalEvent",
                message,
                json!({ "phase": phase, "event": event }),
            ),
            DriverError::Session(SessionError::ResultMismatch { expected, got }) => ApiError::new(
                StatusCode::CONFLICT,
                "ResultMismatch",
                message,
                json!({ "expected": expected, "got": got }),
            ),
            DriverError::Session(SessionError::UnknownTemplate(id)) => ApiError::not_found("templates", &id),
            DriverError::Session(SessionError::InvalidLesson(_)) => {
                ApiError::new(StatusCode::BAD_REQUEST, "InvalidLesson", message, Value::Null)
            }
            DriverError::Session(SessionError::Log(_)) => {
                ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", message, Value::Null)
            }
            DriverError::Schema(v) => ApiError::schema(SchemaViolation::new(format!("event.attempt.{}", v.path), v.reason)),
            DriverError::ComparisonSubmitted => {
                ApiError::new(StatusCode::BAD_REQUEST, "ComparisonSubmitted", message, Value::Null)
            }
            DriverError::Pipeline(PipelineError::PoorTracking { joint, fraction }) => ApiError::new(
                StatusCode::BAD_REQUEST,
                "PoorTracking",
                message,
                json!({ "joint": joint, "fraction": fraction }),
            ),
            DriverError::Pipeline(PipelineError::Skeleton(_)) => {
                ApiError::new(StatusCode::BAD_REQUEST, "DegenerateSkeleton", message, Value::Null)
            }
            DriverError::Pipeline(_) => ApiError::new(StatusCode::BAD_REQUEST, "ComparisonFailed", message, Value::Null),
        }
    }
}

fn parse_body<T: serde::de::DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    let text = std::str::from_utf8(body)
        .map_err(|e| ApiError::schema(SchemaViolation::new("$", format!("body is not UTF-8: {e}"))))?;
    parse_json(text).map_err(ApiError::schema)
}

/// A stored document, returned byte for byte.
fn raw_json(text: String) -> Response {
    ([(axum::http::header::CONTENT_TYPE, "application/json")], text).into_response()
}

async fn health() -> Json<Value> {
    Json(json!({ "ok": true }))
}

#[derive(Serialize)]
struct LessonList {
    lessons: Vec<String>,
}

async fn list_lessons(State(app): State<Arc<AppState>>) -> Result<Json<LessonList>, ApiError> {
    Ok(Json(LessonList {
        lessons: app.store.list(Collection::Lessons)?,
    }))
}

async fn get_lesson(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    Ok(raw_json(app.store.get(Collection::Lessons, &id)?))
}

async fn get_template(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    Ok(raw_json(app.store.get(Collection::Templates, &id)?))
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    lesson_id: String,
    #[serde(default)]
    threshold: Option<f64>,
    #[serde(default)]
    feedback_mode: Option<FeedbackMode>,
}

#[derive(Serialize)]
struct Created<'a> {
    session_id: &'a str,
    state: &'a SessionState,
}

#[derive(Serialize)]
struct StateBody<'a> {
    state: &'a SessionState,
}

async fn create_session(State(app): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let req: CreateSession = parse_body(&body)?;
    let mut lesson = app.store.lesson(&req.lesson_id)?;
    if let Some(t) = req.threshold {
        lesson.threshold = t;
    }
    if let Some(m) = req.feedback_mode {
        lesson.feedback_mode = m;
    }
    let templates = app.store.lesson_templates(&lesson)?;
    let id = ulid::Ulid::new().to_string().to_lowercase();
    let driver = SessionDriver::open(
        id.clone(),
        lesson,
        templates,
        app.store.library()?,
        app.cfg.pipeline.clone(),
        app.cfg.session.clone(),
    )?;
    app.store.create(Collection::Sessions, &id, &driver.log().to_jsonl())?;
    let body = serde_json::to_value(Created {
        session_id: &id,
        state: driver.state(),
    })
    .expect("states serialize");
    app.sessions
        .write()
        .unwrap_or_else(|p| p.into_inner())
        .insert(id, Arc::new(Mutex::new(driver)));
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

async fn get_session(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let handle = app.session(&id)?;
    let driver = handle.lock().await;
    Ok(Json(StateBody { state: driver.state() }).into_response())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EventRequest {
    event: SessionEvent,
}

async fn post_event(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let handle = app.session(&id)?;
    let req: EventRequest = parse_body(&body)?;
    // the guard is taken in arrival order and held until the log is written
    let mut driver = handle.lock_owned().await;
    let store = app.store.clone();
    tokio::task::spawn_blocking(move || -> Result<Value, ApiError> {
        let attempt = match &req.event {
            SessionEvent::RecordingCaptured { attempt } => Some(attempt.clone()),
            _ => None,
        };
        let before = driver.state().history.len();
        driver.apply(req.event)?;
        store.put(Collection::Sessions, driver.session_id(), &driver.log().to_jsonl())?;
        if let (Some(attempt), Some(result)) = (attempt, driver.state().history.get(before)) {
            store.save_attempt(&attempt, result)?;
        }
        Ok(serde_json::to_value(StateBody { state: driver.state() }).expect("states serialize"))
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string(), Value::Null))?
    .map(|v| Json(v).into_response())
}

async fn get_result(
    State(app): State<Arc<AppState>>,
    Path((id, n)): Path<(String, usize)>,
) -> Result<Response, ApiError> {
    let handle = app.session(&id)?;
    let driver = handle.lock().await;
    let result = driver
        .state()
        .history
        .get(n)
        .ok_or_else(|| ApiError::not_found("results", &format!("{id}/{n}")))?;
    Ok(Json(result).into_response())
}

#[derive(Debug, Deserialize)]
struct FeedbackQuery {
    mode: Option<String>,
}

async fn get_feedback(
    State(app): State<Arc<AppState>>,
    Path((id, n)): Path<(String, usize)>,
    Query(q): Query<FeedbackQuery>,
) -> Result<Response, ApiError> {
    let handle = app.session(&id)?;
    let driver = handle.lock().await;
    let mode = match q.mode.as_deref() {
        None => driver.lesson().feedback_mode,
        Some(m) => m
            .parse::<FeedbackMode>()
            .map_err(|e| ApiError::schema(SchemaViolation::new("mode", e.to_string())))?,
    };
    let result = driver
        .state()
        .history
        .get(n)
        .ok_or_else(|| ApiError::not_found("results", &format!("{id}/{n}")))?;
    let template = driver
        .template(&result.template_id)
        .ok_or_else(|| ApiError::not_found("templates", &result.template_id))?;
    let envelope = FeedbackEnvelope::from(lesson_feedback(mode, driver.lesson().corrections, result, template));
    Ok(Json(envelope).into_response())
}
