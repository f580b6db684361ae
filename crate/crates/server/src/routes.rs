//! HTTP routes.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::{json, Value};
use tower_http::services::ServeDir;

use symenv_core::scene::to_document;

use crate::api::*;
use crate::session::{self, Store};

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<Store>,
    /// How long a writer keeps its slot after finishing. Zero in
    /// production; tests raise it to make write races deterministic.
    pub write_hold: Duration,
}

impl AppState {
    pub fn new(store: Arc<Store>) -> Self {
        AppState { store, write_hold: Duration::ZERO }
    }
}

type ApiResult = Result<Response, ApiError>;

pub fn router(state: AppState, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/healthz", get(healthz))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/scene-graph", get(scene_graph))
        .route("/sessions/{id}/agents/{aid}/observation", get(observation))
        .route("/sessions/{id}/actions", post(actions))
        .route("/sessions/{id}/edits", post(edits))
        .route("/sessions/{id}/goal-check", get(goal_check))
        .route("/sessions/{id}/recheck-solvable", post(recheck))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

async fn healthz() -> Json<Value> {
    Json(json!({ "status": "ok" }))
}

async fn create_session(State(st): State<AppState>, body: Bytes) -> ApiResult {
    let value: Value = parse_body(&body)?;
    let (state, certificate) = tokio::task::spawn_blocking(move || session::create_state(value))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
    let graph = to_document(&state.graph);
    let goal = state.goal.clone();
    let s = st.store.insert(state);
    let resp = CreateSessionResponse { id: s.id.clone(), graph, goal, certificate };
    Ok((StatusCode::CREATED, Json(resp)).into_response())
}

async fn scene_graph(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let s = st.store.get(&id)?.read();
    Ok(Json(to_document(&s.graph)).into_response())
}

async fn observation(State(st): State<AppState>, Path((id, aid)): Path<(String, String)>) -> ApiResult {
    let s = st.store.get(&id)?.read();
    Ok(Json(session::observation(&s, &aid)?).into_response())
}

async fn actions(State(st): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let s = st.store.get(&id)?;
    let req: ActionsRequest = parse_body(&body)?;
    let resp = s.write(st.write_hold, move |cur| session::post_actions(cur, req)).await?;
    Ok(Json(resp).into_response())
}

async fn edits(State(st): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let s = st.store.get(&id)?;
    let req: EditsRequest = parse_body(&body)?;
    let resp = s.write(st.write_hold, move |cur| session::post_edits(cur, req)).await?;
    Ok(Json(resp).into_response())
}

async fn goal_check(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let s = st.store.get(&id)?.read();
    let report = s.goal_report().ok_or_else(|| ApiError::no_goal())?;
    Ok(Json(report).into_response())
}

/// Reads the latest revision; the solve runs off the async workers.
async fn recheck(State(st): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let s = st.store.get(&id)?.read();
    let req: RecheckRequest = parse_body(&body)?;
    let resp = tokio::task::spawn_blocking(move || session::recheck(&s, &req))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
    Ok(Json(resp).into_response())
}

/// Serves `router` on `listener` until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    app: Router,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await
}
