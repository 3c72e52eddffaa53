//! LLM-backed fault explanation: prompt assembly from quantified
//! deviations, backend calls with retries, root-cause parsing and chat.

pub mod backend;
pub mod chat;
pub mod parse;
pub mod prompts;
pub mod report;
pub mod store;

pub use backend::{
    BackendError, ChatMessage, HttpBackend, HttpBackendConfig, LlmBackend, Role, StubBackend,
    StubReply,
};
pub use chat::{chat_turn, ChatConfig, ChatError, ChatSession, ChatSessions, TurnOutcome};
pub use parse::{parse_root_causes, Candidate};
pub use prompts::{build_fault_prompt, PromptBundle, PromptError, PromptLibrary, PromptMode};
pub use report::{generate_explanation, FaultEvent, FaultReport, ReportStatus, RetryPolicy};
pub use store::JsonlLog;
