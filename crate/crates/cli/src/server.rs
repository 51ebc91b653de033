//! HTTP front end: `POST /dub` and `GET /health`.

use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use axum::extract::State;
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Serialize;

use polydub::pipeline::{DubRequest, DubResponse, WorkerPool};
use polydub::Error;

struct AppState {
    pool: WorkerPool,
    out_root: PathBuf,
    next_id: AtomicU64,
}

#[derive(Debug, Serialize)]
pub struct Health {
    pub status: &'static str,
    pub workers: usize,
}

#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub error: String,
}

/// Routes backed by `pool`; each request writes under `out_root/<n>`.
pub fn router(pool: WorkerPool, out_root: PathBuf) -> Router {
    let state = Arc::new(AppState { pool, out_root, next_id: AtomicU64::new(0) });
    Router::new().route("/health", get(health)).route("/dub", post(dub)).with_state(state)
}

async fn health(State(state): State<Arc<AppState>>) -> Json<Health> {
    Json(Health { status: "ok", workers: state.pool.size() })
}

async fn dub(
    State(state): State<Arc<AppState>>,
    Json(req): Json<DubRequest>,
) -> Result<Json<DubResponse>, (StatusCode, Json<ErrorBody>)> {
    let id = state.next_id.fetch_add(1, Ordering::Relaxed);
    let out_dir = state.out_root.join(format!("{id:06}"));
    let worker_state = Arc::clone(&state);
    let result = tokio::task::spawn_blocking(move || worker_state.pool.dub(req, out_dir))
        .await
        .map_err(|e| (StatusCode::INTERNAL_SERVER_ERROR, Json(ErrorBody { error: e.to_string() })))?;
    match result {
        Ok(out) => Ok(Json(out.response())),
        Err(e) => Err((status_for(&e), Json(ErrorBody { error: e.to_string() }))),
    }
}

fn status_for(e: &Error) -> StatusCode {
    match e {
        Error::Stage { source, .. } => status_for(source),
        Error::InvalidRequest(_)
        | Error::UnknownSpeaker(_)
        | Error::UnmappableGrapheme { .. }
        | Error::TranslatorUnavailable { .. }
        | Error::LanguageMismatch { .. } => StatusCode::BAD_REQUEST,
        _ => StatusCode::INTERNAL_SERVER_ERROR,
    }
}
