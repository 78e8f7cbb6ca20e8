//! HTTP edit-session service.
//!
//! Endpoints (JSON unless noted):
//! - `POST /sessions` with `{"document": …}` or `{"synth": {k, width, height, n_f?, seed?}}`
//! - `GET /sessions/{id}`
//! - `POST /sessions/{id}/edits` with an edit command, optionally `if_revision`
//! - `POST /sessions/{id}/undo`
//! - `GET /sessions/{id}/render?w=&h=` (PNG)
//! - `GET /healthz`

pub mod session;

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;
use texton_core::{ImageFrame, TextonError};

pub use session::{CreateRequest, EditCommand, Registry, Session, SessionState, UNDO_LIMIT};

type AppState = Arc<Registry>;

#[derive(Debug)]
pub enum ApiError {
    BadRequest(String),
    NotFound(String),
    Conflict(serde_json::Value),
    Unprocessable(serde_json::Value),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, body) = match self {
            ApiError::BadRequest(msg) => (StatusCode::BAD_REQUEST, json!({ "error": msg })),
            ApiError::NotFound(id) => (
                StatusCode::NOT_FOUND,
                json!({ "error": format!("unknown session {id}"), "id": id }),
            ),
            ApiError::Conflict(body) => (StatusCode::CONFLICT, body),
            ApiError::Unprocessable(body) => (StatusCode::UNPROCESSABLE_ENTITY, body),
        };
        (status, Json(body)).into_response()
    }
}

impl From<TextonError> for ApiError {
    fn from(e: TextonError) -> Self {
        if let Some(index) = session::is_index_error(&e) {
            return ApiError::Conflict(json!({ "error": e.to_string(), "index": index }));
        }
        let violations = match &e {
            TextonError::InvalidSet(v) => v.clone(),
            _ => Vec::new(),
        };
        ApiError::Unprocessable(json!({ "error": e.to_string(), "violations": violations }))
    }
}

fn parse_body<T: serde::de::DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::BadRequest(e.to_string()))
}

fn lookup(reg: &Registry, id: &str) -> Result<Arc<std::sync::Mutex<Session>>, ApiError> {
    reg.get(id).ok_or_else(|| ApiError::NotFound(id.to_string()))
}

async fn create(State(reg): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let req: CreateRequest = parse_body(&body)?;
    let set = req.build()?;
    let id = reg.create(set)?;
    let state = {
        let s = lookup(&reg, &id)?;
        let guard = s.lock().expect("session lock poisoned");
        SessionState::of(&id, &guard)
    };
    Ok((StatusCode::CREATED, Json(state)).into_response())
}

async fn show(State(reg): State<AppState>, Path(id): Path<String>) -> Result<Json<SessionState>, ApiError> {
    let s = lookup(&reg, &id)?;
    let guard = s.lock().expect("session lock poisoned");
    Ok(Json(SessionState::of(&id, &guard)))
}

#[derive(Deserialize)]
struct EditRequest {
    #[serde(default)]
    if_revision: Option<u64>,
    #[serde(flatten)]
    command: serde_json::Value,
}

async fn edit(
    State(reg): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<SessionState>, ApiError> {
    let s = lookup(&reg, &id)?;
    let req: EditRequest = parse_body(&body)?;
    let cmd: EditCommand =
        serde_json::from_value(req.command).map_err(|e| ApiError::BadRequest(e.to_string()))?;
    let mut guard = s.lock().expect("session lock poisoned");
    if let Some(expected) = req.if_revision {
        if expected != guard.revision {
            return Err(ApiError::Conflict(json!({
                "error": "stale revision",
                "revision": guard.revision,
            })));
        }
    }
    guard.apply(&cmd)?;
    Ok(Json(SessionState::of(&id, &guard)))
}

async fn undo(State(reg): State<AppState>, Path(id): Path<String>) -> Result<Json<SessionState>, ApiError> {
    let s = lookup(&reg, &id)?;
    let mut guard = s.lock().expect("session lock poisoned");
    if !guard.undo() {
        return Err(ApiError::Conflict(json!({ "error": "nothing to undo" })));
    }
    Ok(Json(SessionState::of(&id, &guard)))
}

#[derive(Deserialize)]
struct RenderParams {
    w: Option<usize>,
    h: Option<usize>,
}

async fn render(
    State(reg): State<AppState>,
    Path(id): Path<String>,
    Query(params): Query<RenderParams>,
) -> Result<Response, ApiError> {
    let snapshot = {
        let s = lookup(&reg, &id)?;
        let guard = s.lock().expect("session lock poisoned");
        guard.current.clone()
    };
    let frame = ImageFrame::new(
        params.w.unwrap_or(snapshot.frame.width),
        params.h.unwrap_or(snapshot.frame.height),
    )
    .map_err(|e| ApiError::BadRequest(e.to_string()))?;
    let png = tokio::task::spawn_blocking(move || texton_core::io::render_png(&snapshot, Some(frame)))
        .await
        .map_err(|e| ApiError::BadRequest(e.to_string()))??;
    Ok(([(header::CONTENT_TYPE, "image/png")], png).into_response())
}

async fn healthz() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

pub fn router() -> Router {
    router_with(Arc::new(Registry::default()))
}

pub fn router_with(registry: Arc<Registry>) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(show))
        .route("/sessions/{id}/edits", post(edit))
        .route("/sessions/{id}/undo", post(undo))
        .route("/sessions/{id}/render", get(render))
        .route("/healthz", get(healthz))
        .with_state(registry)
}

/// Bind `addr` and serve until the process is stopped.
pub async fn serve(addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router()).await
}
