//! HTTP handlers. Reads clone small pieces of shared state and never wait
//! on the monitoring loop.

use std::convert::Infallible;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path, RawQuery, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::Stream;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tepmon_core::variable_catalog;
use tepmon_explain::{BackendError, ChatError, FaultReport, PromptMode};
use tepmon_replay::ReplayError;
use tokio_stream::wrappers::BroadcastStream;
use tokio_stream::StreamExt;

use crate::AppState;

/// Reports attached to a chat turn, most recent last.
const CHAT_REPORTS: usize = 3;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/api/catalog", get(catalog))
        .route("/api/events", get(events))
        .route("/api/fault", get(get_fault).post(post_fault))
        .route("/api/t2/history", get(history))
        .route("/api/snapshot", get(snapshot))
        .route("/api/model", get(model))
        .route("/api/reports", get(list_reports))
        .route("/api/reports/{id}", get(get_report))
        .route("/api/chat", post(chat))
        .with_state(state)
}

pub struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

fn bad_request(msg: impl Into<String>) -> ApiError {
    ApiError(StatusCode::BAD_REQUEST, msg.into())
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| bad_request(format!("malformed payload: {e}")))
}

async fn healthz(State(state): State<AppState>) -> Json<serde_json::Value> {
    let ended = state.snapshot.read().unwrap().ended;
    Json(json!({ "status": if ended { "ended" } else { "ready" } }))
}

async fn catalog() -> Json<serde_json::Value> {
    Json(json!(variable_catalog()))
}

async fn events(
    State(state): State<AppState>,
) -> Sse<impl Stream<Item = Result<Event, Infallible>>> {
    // A lagging subscriber loses its oldest events; the pipeline never waits.
    let stream = BroadcastStream::new(state.events.subscribe()).filter_map(|item| {
        let event = item.ok()?;
        let data = serde_json::to_string(event.as_ref()).ok()?;
        Some(Ok(Event::default().event(event.kind()).data(data)))
    });
    Sse::new(stream).keep_alive(KeepAlive::new().interval(Duration::from_secs(15)))
}

#[derive(Deserialize)]
struct FaultRequest {
    fault_id: u8,
}

#[derive(Serialize)]
struct FaultResponse {
    fault_id: u8,
}

async fn get_fault(State(state): State<AppState>) -> Result<Json<FaultResponse>, ApiError> {
    let replay = state
        .control
        .state()
        .await
        .map_err(|e| ApiError(StatusCode::SERVICE_UNAVAILABLE, e.to_string()))?;
    Ok(Json(FaultResponse {
        fault_id: replay.active_fault,
    }))
}

async fn post_fault(
    State(state): State<AppState>,
    body: Bytes,
) -> Result<Json<FaultResponse>, ApiError> {
    let request: FaultRequest = parse_body(&body)?;
    match state.control.inject_fault(request.fault_id).await {
        Ok(s) => Ok(Json(FaultResponse {
            fault_id: s.active_fault,
        })),
        Err(e @ (ReplayError::UnknownFault(_) | ReplayError::MissingDataset(_))) => {
            Err(ApiError(StatusCode::CONFLICT, e.to_string()))
        }
        Err(e) => Err(ApiError(StatusCode::SERVICE_UNAVAILABLE, e.to_string())),
    }
}

fn limit_param(query: Option<&str>) -> Result<Option<usize>, ApiError> {
    let Some(query) = query else { return Ok(None) };
    let mut limit = None;
    for pair in query.split('&').filter(|p| !p.is_empty()) {
        let (key, value) = pair.split_once('=').unwrap_or((pair, ""));
        if key == "limit" {
            limit = Some(
                value
                    .parse::<usize>()
                    .map_err(|_| bad_request(format!("invalid limit {value:?}")))?,
            );
        }
    }
    Ok(limit)
}

async fn history(
    State(state): State<AppState>,
    RawQuery(query): RawQuery,
) -> Result<Json<Vec<tepmon_core::T2Point>>, ApiError> {
    let limit = limit_param(query.as_deref())?;
    let snap = state.snapshot.read().unwrap();
    let take = limit.unwrap_or(snap.history.len());
    Ok(Json(
        snap.history.iter().rev().take(take).copied().collect(),
    ))
}

async fn snapshot(State(state): State<AppState>) -> Response {
    let snap = state.snapshot.read().unwrap().clone();
    Json(snap).into_response()
}

async fn model(State(state): State<AppState>) -> Json<serde_json::Value> {
    let m = &state.model;
    Json(json!({
        "a": m.a,
        "n": m.n,
        "alpha": m.alpha,
        "variance_target": m.variance_target,
        "variance_captured": m.variance_captured,
        "t2_threshold": m.t2_threshold,
        "column_map": m.column_map,
    }))
}

async fn list_reports(State(state): State<AppState>) -> Json<Vec<Arc<FaultReport>>> {
    Json(state.explainer.reports.read().unwrap().clone())
}

async fn get_report(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<Arc<FaultReport>>, ApiError> {
    state
        .explainer
        .reports
        .read()
        .unwrap()
        .iter()
        .find(|r| r.id == id)
        .cloned()
        .map(Json)
        .ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("no report {id}")))
}

#[derive(Deserialize)]
struct ChatRequest {
    session_id: Option<String>,
    text: String,
    mode: Option<PromptMode>,
}

#[derive(Serialize)]
struct ChatResponse {
    session_id: String,
    reply: String,
}

async fn chat(State(state): State<AppState>, body: Bytes) -> Result<Json<ChatResponse>, ApiError> {
    let request: ChatRequest = parse_body(&body)?;
    if request.text.trim().is_empty() {
        return Err(bad_request("text must not be empty"));
    }
    let session_id = match request.session_id {
        Some(id) => id,
        None => {
            let mode = request.mode.unwrap_or(state.config.explain_mode);
            state
                .chat
                .create(&state.explainer.prompts.chat_system_text(mode))
                .0
        }
    };
    let reports: Vec<FaultReport> = {
        let all = state.explainer.reports.read().unwrap();
        all.iter()
            .skip(all.len().saturating_sub(CHAT_REPORTS))
            .map(|r| FaultReport::clone(r))
            .collect()
    };
    let outcome = state
        .chat
        .turn(
            &session_id,
            &request.text,
            &reports,
            state.explainer.backend.as_ref(),
            state.chat_config,
        )
        .await
        .map_err(|e| match e {
            ChatError::UnknownSession(_) => ApiError(StatusCode::NOT_FOUND, e.to_string()),
            ChatError::ContextOverflow { .. } => {
                ApiError(StatusCode::PAYLOAD_TOO_LARGE, e.to_string())
            }
            ChatError::Backend(
                BackendError::Unavailable(_)
                | BackendError::Transient(_)
                | BackendError::BudgetExceeded(_),
            ) => ApiError(StatusCode::SERVICE_UNAVAILABLE, e.to_string()),
            ChatError::Backend(BackendError::Rejected(_)) => {
                ApiError(StatusCode::BAD_GATEWAY, e.to_string())
            }
        })?;
    Ok(Json(ChatResponse {
        session_id,
        reply: outcome.reply,
    }))
}
