//! Follow-up chat sessions grounded in the process description and fault
//! reports.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use chrono::Utc;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::backend::{BackendError, ChatMessage, LlmBackend, Role};
use crate::report::FaultReport;
use crate::store::JsonlLog;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatSession {
    pub id: String,
    /// System message first, then alternating user and assistant turns.
    pub messages: Vec<ChatMessage>,
    pub attached_reports: Vec<String>,
}

impl ChatSession {
    pub fn new(id: impl Into<String>, system_text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            messages: vec![ChatMessage::new(Role::System, system_text)],
            attached_reports: Vec::new(),
        }
    }

    pub fn system_text(&self) -> &str {
        &self.messages[0].text
    }

    pub fn attach(&mut self, report_id: &str) {
        if !self.attached_reports.iter().any(|r| r == report_id) {
            self.attached_reports.push(report_id.to_owned());
        }
    }

    /// Checks the role-ordering invariant.
    pub fn is_well_formed(&self) -> bool {
        self.messages
            .first()
            .is_some_and(|m| m.role == Role::System)
            && self.messages[1..].iter().enumerate().all(|(i, m)| {
                m.role
                    == if i % 2 == 0 {
                        Role::User
                    } else {
                        Role::Assistant
                    }
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChatConfig {
    /// Upper bound, in characters, of system text plus submitted history.
    pub max_context_chars: usize,
}

impl Default for ChatConfig {
    fn default() -> Self {
        Self {
            max_context_chars: 200_000,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ChatError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("context of {needed} chars exceeds the {limit}-char limit even after trimming")]
    ContextOverflow { needed: usize, limit: usize },
    #[error("unknown chat session {0}")]
    UnknownSession(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TurnOutcome {
    pub reply: String,
    /// Oldest history messages left out of the submitted context.
    pub dropped_messages: usize,
}

/// System text plus the rendered attached reports.
pub fn submitted_system(session: &ChatSession, reports: &[FaultReport]) -> String {
    let mut text = session.system_text().to_owned();
    let attached: Vec<&FaultReport> = session
        .attached_reports
        .iter()
        .filter_map(|id| reports.iter().find(|r| &r.id == id))
        .collect();
    if !attached.is_empty() {
        text.push_str("\n\nATTACHED FAULT REPORTS\n");
        for r in attached {
            text.push('\n');
            text.push_str(&r.context_text());
        }
    }
    text
}

fn chars(messages: &[ChatMessage]) -> usize {
    messages.iter().map(|m| m.text.chars().count()).sum()
}

/// Runs one user turn. On success the user message and the reply are
/// appended to the session; on error the session is unchanged.
///
/// When the context is too long, the oldest user/assistant pairs are left
/// out of the request (the stored history keeps them).
pub async fn chat_turn(
    session: &mut ChatSession,
    user_text: &str,
    reports: &[FaultReport],
    backend: &dyn LlmBackend,
    config: ChatConfig,
) -> Result<TurnOutcome, ChatError> {
    let system = submitted_system(session, reports);
    let mut history: Vec<ChatMessage> = session.messages[1..].to_vec();
    history.push(ChatMessage::user(user_text));

    let budget = config.max_context_chars;
    let fixed = system.chars().count();
    let mut dropped = 0;
    while fixed + chars(&history[dropped..]) > budget && history.len() - dropped > 1 {
        dropped += 2;
    }
    let submitted = &history[dropped..];
    let needed = fixed + chars(submitted);
    if needed > budget {
        return Err(ChatError::ContextOverflow {
            needed,
            limit: budget,
        });
    }
    if dropped > 0 {
        tracing::warn!(session = %session.id, dropped, "chat context trimmed");
    }
    let reply = backend.complete(&system, submitted).await?;
    session.messages.push(ChatMessage::user(user_text));
    session.messages.push(ChatMessage::assistant(reply.clone()));
    Ok(TurnOutcome {
        reply,
        dropped_messages: dropped,
    })
}

pub type SharedSession = Arc<tokio::sync::Mutex<ChatSession>>;

/// Registry of independent sessions. Each session has its own async lock,
/// so turns within a session are serialized while different sessions run
/// concurrently.
#[derive(Debug, Default)]
pub struct ChatSessions {
    sessions: Mutex<HashMap<String, SharedSession>>,
    log: Option<JsonlLog>,
}

impl ChatSessions {
    pub fn new(log: Option<JsonlLog>) -> Self {
        Self {
            sessions: Mutex::default(),
            log,
        }
    }

    pub fn create(&self, system_text: &str) -> (String, SharedSession) {
        let id = uuid::Uuid::new_v4().to_string();
        let session = Arc::new(tokio::sync::Mutex::new(ChatSession::new(&id, system_text)));
        self.sessions
            .lock()
            .unwrap()
            .insert(id.clone(), Arc::clone(&session));
        self.persist(&id, &ChatMessage::new(Role::System, system_text));
        (id, session)
    }

    pub fn get(&self, id: &str) -> Option<SharedSession> {
        self.sessions.lock().unwrap().get(id).cloned()
    }

    pub fn len(&self) -> usize {
        self.sessions.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Runs a turn on a registered session, persisting both new messages.
    pub async fn turn(
        &self,
        id: &str,
        user_text: &str,
        reports: &[FaultReport],
        backend: &dyn LlmBackend,
        config: ChatConfig,
    ) -> Result<TurnOutcome, ChatError> {
        let shared = self
            .get(id)
            .ok_or_else(|| ChatError::UnknownSession(id.to_owned()))?;
        let mut session = shared.lock().await;
        for r in reports {
            session.attach(&r.id);
        }
        let outcome = chat_turn(&mut session, user_text, reports, backend, config).await?;
        let n = session.messages.len();
        for m in &session.messages[n - 2..] {
            self.persist(id, m);
        }
        Ok(outcome)
    }

    fn persist(&self, id: &str, message: &ChatMessage) {
        if let Some(log) = &self.log {
            let record = json!({
                "session_id": id,
                "role": message.role,
                "text": message.text,
                "ts": Utc::now().to_rfc3339(),
            });
            if let Err(e) = log.append(&record) {
                tracing::error!(error = %e, "chat log write failed");
            }
        }
    }
}
