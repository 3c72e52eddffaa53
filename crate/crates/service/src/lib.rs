//! Live monitoring service: replay → T² monitor → explanations, exposed
//! over HTTP with a Server-Sent Events stream.

pub mod api;
pub mod config;
pub mod pipeline;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use anyhow::Context as _;
use tepmon_core::{
    fault_path, load_model, load_timeseries, save_model, AlarmState, Monitor, MonitorConfig,
    PcaModel,
};
use tepmon_explain::{
    ChatConfig, ChatSessions, HttpBackend, JsonlLog, LlmBackend, PromptLibrary, RetryPolicy,
    StubBackend, StubReply,
};
use tepmon_replay::{ReplayConfig, ReplayControl};
use tokio::sync::{broadcast, Semaphore};

pub use config::{BackendConfig, ServiceConfig};
pub use pipeline::{MonitorSnapshot, ServiceEvent};

#[derive(Clone)]
pub struct AppState {
    pub config: Arc<ServiceConfig>,
    pub model: Arc<PcaModel>,
    pub snapshot: Arc<RwLock<MonitorSnapshot>>,
    pub events: broadcast::Sender<Arc<ServiceEvent>>,
    pub control: ReplayControl,
    pub explainer: Arc<pipeline::Explainer>,
    pub chat: Arc<ChatSessions>,
    pub chat_config: ChatConfig,
    pub run_dir: PathBuf,
}

pub struct RunningService {
    pub addr: SocketAddr,
    pub state: AppState,
    pub server: tokio::task::JoinHandle<std::io::Result<()>>,
    pub pipeline: tokio::task::JoinHandle<()>,
}

impl RunningService {
    pub fn url(&self, path: &str) -> String {
        format!("http://{}{}", self.addr, path)
    }

    pub async fn shutdown(self) {
        self.state.control.stop().await;
        self.server.abort();
        let _ = self.pipeline.await;
    }
}

/// Loads the saved model, or fits one on the normal series (saving it when
/// a model path is configured).
pub fn obtain_model(config: &ServiceConfig) -> anyhow::Result<PcaModel> {
    if let (Some(path), false) = (&config.model_path, config.fit_on_start) {
        if path.exists() {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading model {}", path.display()))?;
            return load_model(&text).with_context(|| format!("loading model {}", path.display()));
        }
        tracing::warn!(path = %path.display(), "model file not found; fitting from normal data");
    }
    let normal_path = fault_path(&config.data_dir, 0);
    let normal = load_timeseries(&normal_path, 0)
        .with_context(|| format!("loading normal series {}", normal_path.display()))?;
    let model = PcaModel::fit_normal(&normal, config.variance_target, config.alpha)
        .context("fitting PCA model")?;
    tracing::info!(a = model.a, threshold = model.t2_threshold, "model fitted");
    if let Some(path) = &config.model_path {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, save_model(&model))
            .with_context(|| format!("writing model {}", path.display()))?;
    }
    Ok(model)
}

pub fn make_backend(config: &BackendConfig) -> anyhow::Result<Arc<dyn LlmBackend>> {
    Ok(match config {
        BackendConfig::Http(http) => Arc::new(HttpBackend::new(http.clone())?),
        BackendConfig::Stub { reply: Some(text) } => Arc::new(StubBackend::fixed(text.clone())),
        BackendConfig::Stub { reply: None } => Arc::new(StubBackend::new(StubReply::Echo)),
    })
}

/// Starts the pipeline and HTTP server. `backend` overrides the configured
/// one (used by tests to inject a stub).
pub async fn start(
    config: ServiceConfig,
    backend: Option<Arc<dyn LlmBackend>>,
) -> anyhow::Result<RunningService> {
    config.validate()?;
    let model = Arc::new(obtain_model(&config)?);
    let backend = match backend {
        Some(b) => b,
        None => make_backend(&config.backend)?,
    };
    let prompts = Arc::new(match &config.prompts_dir {
        Some(dir) => PromptLibrary::load(dir)?,
        None => PromptLibrary::embedded(),
    });

    let run_id = format!(
        "{}-{}",
        chrono::Utc::now().format("%Y%m%dT%H%M%SZ"),
        &uuid::Uuid::new_v4().simple().to_string()[..8]
    );
    let run_dir = config.store_dir.join(run_id);
    let open = |name: &str| -> anyhow::Result<Arc<JsonlLog>> {
        let path = run_dir.join(name);
        Ok(Arc::new(
            JsonlLog::open(&path).with_context(|| format!("opening {}", path.display()))?,
        ))
    };
    let report_log = open("reports.jsonl")?;
    let audit = open("audit.jsonl")?;
    let chat_log = JsonlLog::open(run_dir.join("chat.jsonl"))?;

    let replay = tepmon_replay::start(ReplayConfig {
        tick_interval: config.tick_interval(),
        data_dir: config.data_dir.clone(),
        start_fault: config.start_fault,
        loop_at_end: config.loop_at_end,
    })?;

    let monitor_config = MonitorConfig {
        top_k: config.top_k,
        consecutive_required: config.consecutive_required,
        rank_by_abs: config.rank_by_abs,
    };
    let monitor = Monitor::new(Arc::clone(&model), monitor_config);
    let snapshot = Arc::new(RwLock::new(MonitorSnapshot::new(
        config.start_fault,
        AlarmState::new(config.consecutive_required),
        model.t2_threshold,
        config.history_len,
    )));
    let (events, _) = broadcast::channel(config.event_buffer);
    let explainer = Arc::new(pipeline::Explainer {
        backend,
        prompts,
        mode: config.explain_mode,
        retry: RetryPolicy::default(),
        audit: Some(audit),
        report_log: Some(report_log),
        reports: Arc::default(),
        pool: Arc::new(Semaphore::new(config.explain_workers)),
    });
    let pipeline = tokio::spawn(pipeline::run_pipeline(
        monitor,
        replay.events,
        Arc::clone(&snapshot),
        events.clone(),
        Arc::clone(&explainer),
    ));

    let state = AppState {
        chat_config: ChatConfig {
            max_context_chars: config.chat_context_chars,
        },
        config: Arc::new(config.clone()),
        model,
        snapshot,
        events,
        control: replay.control,
        explainer,
        chat: Arc::new(ChatSessions::new(Some(chat_log))),
        run_dir,
    };
    let listener = tokio::net::TcpListener::bind((config.listen, config.port))
        .await
        .with_context(|| format!("binding {}:{}", config.listen, config.port))?;
    let addr = listener.local_addr()?;
    let app = api::router(state.clone());
    let server = tokio::spawn(async move { axum::serve(listener, app).await });
    tracing::info!(%addr, run_dir = %state.run_dir.display(), "service listening");
    Ok(RunningService {
        addr,
        state,
        server,
        pipeline,
    })
}
