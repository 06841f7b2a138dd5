//! HTTP face of the engine. Three endpoints:
//!
//! - `GET  /health`   → engine version plus SHA-256 of each loaded artifact,
//! - `POST /retrieve` → `{"claim": "...", "k": 3}` → scored documents,
//! - `POST /respond`  → `{"claim": "..."}` → full scored counter-response.
//!
//! Handlers never panic the process: engine work runs on blocking threads,
//! malformed requests come back as 4xx with a machine-readable error code,
//! and anything unexpected is a 5xx. The handlers call the same
//! `Engine::retrieve`/`Engine::respond` the CLI uses, so a claim answered
//! over HTTP and one answered at the command line go down one code path.

use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;

use refute_core::orchestrate::OrchestrateError;
use refute_core::pipeline::PipelineError;
use refute_core::Engine;

pub fn router(engine: Arc<Engine>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/retrieve", post(retrieve))
        .route("/respond", post(respond))
        .with_state(engine)
}

/// Binds `addr` (hostnames allowed), announces the bound address on
/// stdout, and serves until the process is stopped.
pub async fn serve(engine: Arc<Engine>, addr: &str) -> Result<(), String> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| format!("cannot bind {addr}: {e}"))?;
    let local = listener.local_addr().map_err(|e| e.to_string())?;
    println!("listening on http://{local}");
    use std::io::Write;
    std::io::stdout().flush().ok();
    axum::serve(listener, router(engine)).await.map_err(|e| e.to_string())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RetrieveRequest {
    claim: String,
    k: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RespondRequest {
    claim: String,
}

async fn health(State(engine): State<Arc<Engine>>) -> Response {
    Json(engine.health()).into_response()
}

async fn retrieve(
    State(engine): State<Arc<Engine>>,
    payload: Result<Json<RetrieveRequest>, JsonRejection>,
) -> Response {
    let request = match payload {
        Ok(Json(request)) => request,
        Err(rejection) => return bad_body(rejection),
    };
    if request.claim.trim().is_empty() {
        return api_error(StatusCode::BAD_REQUEST, "invalid_argument", "claim must be non-empty");
    }
    if request.k == Some(0) {
        return api_error(StatusCode::BAD_REQUEST, "invalid_argument", "k must be at least 1");
    }
    let outcome =
        tokio::task::spawn_blocking(move || engine.retrieve(&request.claim, request.k)).await;
    match outcome {
        Ok(Ok(documents)) => Json(json!({ "documents": documents })).into_response(),
        Ok(Err(err)) => engine_error(err),
        Err(_) => internal("retrieval worker failed"),
    }
}

async fn respond(
    State(engine): State<Arc<Engine>>,
    payload: Result<Json<RespondRequest>, JsonRejection>,
) -> Response {
    let request = match payload {
        Ok(Json(request)) => request,
        Err(rejection) => return bad_body(rejection),
    };
    if request.claim.trim().is_empty() {
        return api_error(StatusCode::BAD_REQUEST, "invalid_argument", "claim must be non-empty");
    }
    let outcome = tokio::task::spawn_blocking(move || engine.respond(&request.claim)).await;
    match outcome {
        Ok(Ok(counter)) => Json(counter).into_response(),
        Ok(Err(err)) => engine_error(err),
        Err(_) => internal("response worker failed"),
    }
}

/// `{"error": {"code": ..., "message": ...}}` — the code is the contract,
/// the message is for humans.
fn api_error(status: StatusCode, code: &str, message: impl Into<String>) -> Response {
    (status, Json(json!({ "error": { "code": code, "message": message.into() } })))
        .into_response()
}

fn bad_body(rejection: JsonRejection) -> Response {
    api_error(StatusCode::BAD_REQUEST, "invalid_json", rejection.body_text())
}

fn internal(message: &str) -> Response {
    api_error(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
}

fn engine_error(err: OrchestrateError) -> Response {
    match &err {
        OrchestrateError::Backend { attempts, .. } => api_error(
            StatusCode::BAD_GATEWAY,
            "backend_unavailable",
            format!("generation backend failed after {attempts} attempts"),
        ),
        OrchestrateError::EmptyEvidence => api_error(
            StatusCode::UNPROCESSABLE_ENTITY,
            "no_evidence",
            "no evidence matched the claim",
        ),
        OrchestrateError::BadRequest(message) => {
            api_error(StatusCode::BAD_REQUEST, "invalid_argument", message.clone())
        }
        OrchestrateError::Pipeline(PipelineError::BadConfig(message)) => {
            api_error(StatusCode::BAD_REQUEST, "invalid_argument", message.clone())
        }
        OrchestrateError::BadTemplate(_)
        | OrchestrateError::Pipeline(_)
        | OrchestrateError::Reward(_) => internal(&err.to_string()),
    }
}
