//! LLM backends: an OpenAI-compatible chat-completions client and a
//! scripted stub for tests.

use std::collections::VecDeque;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub text: String,
}

impl ChatMessage {
    pub fn new(role: Role, text: impl Into<String>) -> Self {
        Self {
            role,
            text: text.into(),
        }
    }

    pub fn user(text: impl Into<String>) -> Self {
        Self::new(Role::User, text)
    }

    pub fn assistant(text: impl Into<String>) -> Self {
        Self::new(Role::Assistant, text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BackendError {
    /// Timeouts, connection resets, 5xx and rate limiting. Worth retrying.
    #[error("transient backend failure: {0}")]
    Transient(String),
    #[error("backend unavailable: {0}")]
    Unavailable(String),
    #[error("backend budget or quota exceeded: {0}")]
    BudgetExceeded(String),
    #[error("backend rejected the request: {0}")]
    Rejected(String),
}

impl BackendError {
    pub fn is_transient(&self) -> bool {
        matches!(self, Self::Transient(_))
    }
}

/// Minimal completion interface: a system text plus the ordered
/// conversation, returning the assistant reply.
#[async_trait]
pub trait LlmBackend: Send + Sync {
    fn model_name(&self) -> &str;

    async fn complete(
        &self,
        system: &str,
        messages: &[ChatMessage],
    ) -> Result<String, BackendError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpBackendConfig {
    /// Base URL up to and including the API version, e.g. `https://api.openai.com/v1`.
    pub base_url: String,
    pub model: String,
    /// Environment variable holding the API key.
    pub api_key_env: String,
    pub timeout_secs: u64,
    /// Sent as `temperature`; `None` omits the field for models that reject it.
    pub temperature: Option<f64>,
}

impl Default for HttpBackendConfig {
    fn default() -> Self {
        Self {
            base_url: "https://api.openai.com/v1".into(),
            model: "gpt-4o".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            timeout_secs: 120,
            temperature: Some(0.0),
        }
    }
}

pub struct HttpBackend {
    config: HttpBackendConfig,
    api_key: Option<String>,
    client: reqwest::Client,
}

impl HttpBackend {
    pub fn new(config: HttpBackendConfig) -> Result<Self, BackendError> {
        let client = reqwest::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| BackendError::Unavailable(e.to_string()))?;
        let api_key = std::env::var(&config.api_key_env)
            .ok()
            .filter(|k| !k.is_empty());
        Ok(Self {
            config,
            api_key,
            client,
        })
    }
}

#[derive(Serialize)]
struct WireMessage<'a> {
    role: Role,
    content: &'a str,
}

#[derive(Serialize)]
struct CompletionRequest<'a> {
    model: &'a str,
    messages: Vec<WireMessage<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    temperature: Option<f64>,
}

#[derive(Deserialize)]
struct CompletionResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    content: Option<String>,
}

fn classify_status(status: reqwest::StatusCode, body: &str) -> BackendError {
    let detail = format!(
        "HTTP {}: {}",
        status.as_u16(),
        body.chars().take(300).collect::<String>()
    );
    match status.as_u16() {
        402 => BackendError::BudgetExceeded(detail),
        429 if body.contains("insufficient_quota") => BackendError::BudgetExceeded(detail),
        408 | 409 | 429 | 500..=599 => BackendError::Transient(detail),
        401 | 403 | 404 => BackendError::Unavailable(detail),
        _ => BackendError::Rejected(detail),
    }
}

#[async_trait]
impl LlmBackend for HttpBackend {
    fn model_name(&self) -> &str {
        &self.config.model
    }

    async fn complete(
        &self,
        system: &str,
        messages: &[ChatMessage],
    ) -> Result<String, BackendError> {
        let mut wire = vec![WireMessage {
            role: Role::System,
            content: system,
        }];
        wire.extend(messages.iter().map(|m| WireMessage {
            role: m.role,
            content: &m.text,
        }));
        let request = CompletionRequest {
            model: &self.config.model,
            messages: wire,
            temperature: self.config.temperature,
        };
        let url = format!(
            "{}/chat/completions",
            self.config.base_url.trim_end_matches('/')
        );
        let mut builder = self.client.post(url).json(&request);
        if let Some(key) = &self.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = builder.send().await.map_err(|e| {
            if e.is_timeout() || e.is_connect() || e.is_request() {
                BackendError::Transient(e.to_string())
            } else {
                BackendError::Unavailable(e.to_string())
            }
        })?;
        let status = response.status();
        let body = response
            .text()
            .await
            .map_err(|e| BackendError::Transient(e.to_string()))?;
        if !status.is_success() {
            return Err(classify_status(status, &body));
        }
        let parsed: CompletionResponse = serde_json::from_str(&body)
            .map_err(|e| BackendError::Rejected(format!("malformed completion: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| BackendError::Rejected("completion has no content".into()))
    }
}

/// What the stub answers once its script is exhausted.
#[derive(Debug, Clone, PartialEq)]
pub enum StubReply {
    Fixed(String),
    /// `"echo: <last user message>"`.
    Echo,
}

/// Deterministic backend: replays a script of results, then a default reply.
/// Can be switched off to simulate an outage.
pub struct StubBackend {
    name: String,
    script: Mutex<VecDeque<Result<String, BackendError>>>,
    default: StubReply,
    available: AtomicBool,
    calls: Mutex<Vec<(String, Vec<ChatMessage>)>>,
}

impl StubBackend {
    pub fn new(default: StubReply) -> Self {
        Self {
            name: "stub".into(),
            script: Mutex::new(VecDeque::new()),
            default,
            available: AtomicBool::new(true),
            calls: Mutex::new(Vec::new()),
        }
    }

    pub fn fixed(text: impl Into<String>) -> Self {
        Self::new(StubReply::Fixed(text.into()))
    }

    pub fn echo() -> Self {
        Self::new(StubReply::Echo)
    }

    pub fn with_script(
        self,
        script: impl IntoIterator<Item = Result<String, BackendError>>,
    ) -> Self {
        self.script.lock().unwrap().extend(script);
        self
    }

    pub fn set_available(&self, available: bool) {
        self.available.store(available, Ordering::SeqCst);
    }

    /// Every (system, messages) pair submitted so far.
    pub fn calls(&self) -> Vec<(String, Vec<ChatMessage>)> {
        self.calls.lock().unwrap().clone()
    }
}

#[async_trait]
impl LlmBackend for StubBackend {
    fn model_name(&self) -> &str {
        &self.name
    }

    async fn complete(
        &self,
        system: &str,
        messages: &[ChatMessage],
    ) -> Result<String, BackendError> {
        self.calls
            .lock()
            .unwrap()
            .push((system.to_owned(), messages.to_vec()));
        if !self.available.load(Ordering::SeqCst) {
            return Err(BackendError::Unavailable(
                "stub backend switched off".into(),
            ));
        }
        if let Some(next) = self.script.lock().unwrap().pop_front() {
            return next;
        }
        Ok(match &self.default {
            StubReply::Fixed(text) => text.clone(),
            StubReply::Echo => {
                let last = messages
                    .iter()
                    .rev()
                    .find(|m| m.role == Role::User)
                    .map(|m| m.text.as_str())
                    .unwrap_or("");
                format!("echo: {last}")
            }
        })
    }
}
