//! Fault reports: prompt → backend (with retries) → parsed candidates.

use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::Serialize;
use serde_json::json;
use tepmon_core::FeatureDeviation;

use crate::backend::{BackendError, ChatMessage, LlmBackend};
use crate::parse::{parse_root_causes, Candidate};
use crate::prompts::{PromptBundle, PromptMode};
use crate::store::JsonlLog;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FaultEvent {
    pub alarm_t: usize,
    pub t2: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportStatus {
    Complete,
    /// The backend answered but no candidate could be extracted.
    ParseFailed,
    /// No answer was obtained; deviations are still reported.
    ExplanationFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FaultReport {
    pub id: String,
    /// Replayed fault series active when the alarm fired, if known.
    pub fault_id: Option<u8>,
    pub fault_event: FaultEvent,
    pub deviations: Vec<FeatureDeviation>,
    pub mode: PromptMode,
    pub raw_response: String,
    pub candidates: Vec<Candidate>,
    pub model_name: String,
    pub created_at: DateTime<Utc>,
    pub status: ReportStatus,
    pub error: Option<String>,
    /// Backend calls made, including the successful one.
    pub attempts: u32,
}

impl FaultReport {
    /// Plain-text rendering used as chat context.
    pub fn context_text(&self) -> String {
        let mut out = format!(
            "Fault report {} (alarm at t={}, T2={:.3}, threshold={:.3}):\nTop deviations:\n",
            self.id, self.fault_event.alarm_t, self.fault_event.t2, self.fault_event.threshold
        );
        out.push_str(&crate::prompts::render_deviations(&self.deviations));
        if self.raw_response.is_empty() {
            out.push_str("No explanation is available for this alarm.\n");
        } else {
            out.push_str("Explanation:\n");
            out.push_str(&self.raw_response);
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub initial_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 3,
            initial_backoff: Duration::from_millis(500),
        }
    }
}

/// Calls `backend` and retries transient failures with exponential backoff.
/// Returns the result and the number of calls made.
pub async fn complete_with_retry(
    backend: &dyn LlmBackend,
    system: &str,
    messages: &[ChatMessage],
    policy: RetryPolicy,
    audit: Option<&JsonlLog>,
) -> (Result<String, BackendError>, u32) {
    let mut attempt = 0;
    let mut delay = policy.initial_backoff;
    loop {
        attempt += 1;
        audit_write(
            audit,
            json!({"kind": "request", "model": backend.model_name(), "attempt": attempt,
                   "system": system, "messages": messages}),
        );
        match backend.complete(system, messages).await {
            Ok(text) => {
                audit_write(
                    audit,
                    json!({"kind": "response", "model": backend.model_name(), "attempt": attempt,
                           "text": text}),
                );
                return (Ok(text), attempt);
            }
            Err(e) if e.is_transient() && attempt <= policy.max_retries => {
                tracing::warn!(attempt, error = %e, "backend call failed, retrying");
                audit_write(
                    audit,
                    json!({"kind": "retry", "model": backend.model_name(), "attempt": attempt,
                           "error": e.to_string(), "backoff_ms": delay.as_millis() as u64}),
                );
                tokio::time::sleep(delay).await;
                delay *= 2;
            }
            Err(e) => {
                audit_write(
                    audit,
                    json!({"kind": "error", "model": backend.model_name(), "attempt": attempt,
                           "error": e.to_string()}),
                );
                let e = match e {
                    BackendError::Transient(msg) => {
                        BackendError::Unavailable(format!("retries exhausted: {msg}"))
                    }
                    other => other,
                };
                return (Err(e), attempt);
            }
        }
    }
}

fn audit_write(audit: Option<&JsonlLog>, mut record: serde_json::Value) {
    if let Some(log) = audit {
        record["ts"] = json!(Utc::now().to_rfc3339());
        if let Err(e) = log.append(&record) {
            tracing::error!(error = %e, path = %log.path().display(), "audit log write failed");
        }
    }
}

/// Produces a report for one alarm. Always returns a report; failures are
/// recorded in `status` and `error`.
pub async fn generate_explanation(
    bundle: &PromptBundle,
    event: FaultEvent,
    deviations: Vec<FeatureDeviation>,
    backend: &dyn LlmBackend,
    policy: RetryPolicy,
    audit: Option<&JsonlLog>,
) -> FaultReport {
    let messages = [ChatMessage::user(bundle.user_text.clone())];
    let (result, attempts) =
        complete_with_retry(backend, &bundle.system_text, &messages, policy, audit).await;
    let (raw_response, candidates, status, error) = match result {
        Ok(text) => {
            let candidates = parse_root_causes(&text, bundle.mode);
            let status = if candidates.is_empty() {
                ReportStatus::ParseFailed
            } else {
                ReportStatus::Complete
            };
            (text, candidates, status, None)
        }
        Err(e) => (
            String::new(),
            Vec::new(),
            ReportStatus::ExplanationFailed,
            Some(e.to_string()),
        ),
    };
    FaultReport {
        id: uuid::Uuid::new_v4().to_string(),
        fault_id: None,
        fault_event: event,
        deviations,
        mode: bundle.mode,
        raw_response,
        candidates,
        model_name: backend.model_name().to_owned(),
        created_at: Utc::now(),
        status,
        error,
        attempts,
    }
}
