use std::net::{IpAddr, Ipv4Addr};
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;
use tepmon_explain::{HttpBackendConfig, PromptMode};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum BackendConfig {
    Http(HttpBackendConfig),
    /// Deterministic offline backend; replies with `reply`, or echoes the
    /// last user message when `reply` is absent.
    Stub {
        reply: Option<String>,
    },
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self::Http(HttpBackendConfig::default())
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub listen: IpAddr,
    pub port: u16,
    pub data_dir: PathBuf,
    /// Saved model to load; with `fit_on_start` the fitted model is written here.
    pub model_path: Option<PathBuf>,
    pub fit_on_start: bool,
    pub alpha: f64,
    pub variance_target: f64,
    pub top_k: usize,
    pub consecutive_required: usize,
    pub rank_by_abs: bool,
    pub history_len: usize,
    pub tick_interval_ms: u64,
    pub start_fault: u8,
    pub loop_at_end: bool,
    /// Run directories (reports, chat, audit log) are created here.
    pub store_dir: PathBuf,
    /// Template directory; the compiled-in templates are used when unset.
    pub prompts_dir: Option<PathBuf>,
    pub explain_mode: PromptMode,
    pub explain_workers: usize,
    pub chat_context_chars: usize,
    pub event_buffer: usize,
    pub backend: BackendConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            listen: IpAddr::V4(Ipv4Addr::LOCALHOST),
            port: 8080,
            data_dir: PathBuf::from("data"),
            model_path: None,
            fit_on_start: false,
            alpha: 0.01,
            variance_target: 0.90,
            top_k: 6,
            consecutive_required: 6,
            rank_by_abs: false,
            history_len: 500,
            tick_interval_ms: 1000,
            start_fault: 0,
            loop_at_end: true,
            store_dir: PathBuf::from("runs"),
            prompts_dir: None,
            explain_mode: PromptMode::RootCausesIncluded,
            explain_workers: 4,
            chat_context_chars: 200_000,
            event_buffer: 1024,
            backend: BackendConfig::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parsing {path}: {source}")]
    Parse {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

impl ServiceConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_owned(),
            source,
        })
    }

    pub fn tick_interval(&self) -> Duration {
        Duration::from_millis(self.tick_interval_ms)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_owned()));
        if self.top_k < 1 {
            return bad("top_k must be >= 1");
        }
        if self.consecutive_required < 1 {
            return bad("consecutive_required must be >= 1");
        }
        if self.tick_interval_ms == 0 {
            return bad("tick_interval_ms must be > 0");
        }
        if self.history_len == 0 {
            return bad("history_len must be > 0");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must be in (0, 1)");
        }
        if !(self.variance_target > 0.0 && self.variance_target <= 1.0) {
            return bad("variance_target must be in (0, 1]");
        }
        if self.explain_workers == 0 || self.event_buffer == 0 {
            return bad("explain_workers and event_buffer must be > 0");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let cfg = ServiceConfig::from_toml_str(
            r#"
            port = 9000
            data_dir = "/srv/tep"
            explain_mode = "general"
            top_k = 6

            [backend]
            kind = "http"
            base_url = "http://localhost:11434/v1"
            model = "llama3"
            "#,
        )
        .unwrap();
        assert_eq!(cfg.port, 9000);
        assert_eq!(cfg.explain_mode, PromptMode::GeneralReasoning);
        match &cfg.backend {
            BackendConfig::Http(h) => {
                assert_eq!(h.model, "llama3");
                assert_eq!(h.api_key_env, "OPENAI_API_KEY");
                assert_eq!(h.temperature, Some(0.0));
            }
            other => panic!("{other:?}"),
        }
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn stub_backend_and_validation() {
        let cfg = ServiceConfig::from_toml_str("[backend]\nkind = \"stub\"\n").unwrap();
        assert_eq!(cfg.backend, BackendConfig::Stub { reply: None });
        let cfg = ServiceConfig::from_toml_str("top_k = 0").unwrap();
        assert!(cfg.validate().is_err());
        assert!(ServiceConfig::from_toml_str("unknown_key = 1").is_err());
    }

    #[test]
    fn example_config_parses() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../config/service.example.toml");
        let cfg = ServiceConfig::load(&path).unwrap();
        assert!(cfg.validate().is_ok());
        assert_eq!(cfg.port, 8080);
    }
}
