//! The monitoring loop: replay events → T² monitor → snapshot, events and
//! asynchronous explanations.

use std::collections::VecDeque;
use std::sync::{Arc, RwLock};

use serde::Serialize;
use tepmon_core::{AlarmEvent, AlarmState, Monitor, SampleVector, T2Point};
use tepmon_explain::{
    build_fault_prompt, generate_explanation, FaultEvent, FaultReport, JsonlLog, LlmBackend,
    PromptLibrary, PromptMode, ReportStatus, RetryPolicy,
};
use tepmon_replay::ReplayEvent;
use tokio::sync::{broadcast, mpsc, Semaphore};

/// Consistent view of the monitor, replaced atomically once per sample.
#[derive(Debug, Clone, Serialize)]
pub struct MonitorSnapshot {
    pub active_fault: u8,
    pub latest_sample: Option<SampleVector>,
    pub latest_point: Option<T2Point>,
    pub alarm: AlarmState,
    pub threshold: f64,
    /// Oldest first, at most `history_len` points.
    pub history: VecDeque<T2Point>,
    pub history_len: usize,
    pub ended: bool,
}

impl MonitorSnapshot {
    pub fn new(active_fault: u8, alarm: AlarmState, threshold: f64, history_len: usize) -> Self {
        Self {
            active_fault,
            latest_sample: None,
            latest_point: None,
            alarm,
            threshold,
            history: VecDeque::with_capacity(history_len),
            history_len,
            ended: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SamplePayload {
    pub fault_id: u8,
    pub t: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AlarmPayload {
    pub fault_id: u8,
    #[serde(flatten)]
    pub event: AlarmEvent,
}

/// Events pushed to subscribers, serialized as `{"type", "payload"}`.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "type", content = "payload", rename_all = "lowercase")]
pub enum ServiceEvent {
    Sample(SamplePayload),
    T2(T2Point),
    Alarm(AlarmPayload),
    Report(Arc<FaultReport>),
}

impl ServiceEvent {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Sample(_) => "sample",
            Self::T2(_) => "t2",
            Self::Alarm(_) => "alarm",
            Self::Report(_) => "report",
        }
    }
}

/// Everything an explanation task needs.
pub struct Explainer {
    pub backend: Arc<dyn LlmBackend>,
    pub prompts: Arc<PromptLibrary>,
    pub mode: PromptMode,
    pub retry: RetryPolicy,
    pub audit: Option<Arc<JsonlLog>>,
    pub report_log: Option<Arc<JsonlLog>>,
    pub reports: Arc<RwLock<Vec<Arc<FaultReport>>>>,
    pub pool: Arc<Semaphore>,
}

impl Explainer {
    async fn explain(&self, fault_id: u8, alarm: AlarmEvent) -> FaultReport {
        let event = FaultEvent {
            alarm_t: alarm.alarm_t,
            t2: alarm.t2,
            threshold: alarm.threshold,
        };
        let mut report = match build_fault_prompt(&alarm.deviations, self.mode, &self.prompts) {
            Ok(bundle) => {
                generate_explanation(
                    &bundle,
                    event,
                    alarm.deviations,
                    self.backend.as_ref(),
                    self.retry,
                    self.audit.as_deref(),
                )
                .await
            }
            Err(e) => FaultReport {
                id: uuid::Uuid::new_v4().to_string(),
                fault_id: None,
                fault_event: event,
                deviations: alarm.deviations,
                mode: self.mode,
                raw_response: String::new(),
                candidates: Vec::new(),
                model_name: self.backend.model_name().to_owned(),
                created_at: chrono::Utc::now(),
                status: ReportStatus::ExplanationFailed,
                error: Some(e.to_string()),
                attempts: 0,
            },
        };
        report.fault_id = Some(fault_id);
        report
    }
}

/// Runs until the replay stream closes. The only writer of `snapshot`.
pub async fn run_pipeline(
    mut monitor: Monitor,
    mut replay: mpsc::Receiver<ReplayEvent>,
    snapshot: Arc<RwLock<MonitorSnapshot>>,
    events: broadcast::Sender<Arc<ServiceEvent>>,
    explainer: Arc<Explainer>,
) {
    let publish = |e: ServiceEvent| {
        // No subscribers is not an error.
        let _ = events.send(Arc::new(e));
    };
    let mut current_fault = snapshot.read().unwrap().active_fault;
    while let Some(event) = replay.recv().await {
        let (fault_id, sample) = match event {
            ReplayEvent::Sample { fault_id, sample } => (fault_id, sample),
            ReplayEvent::EndOfSeries { fault_id, emitted } => {
                tracing::info!(fault_id, emitted, "replay reached end of series");
                snapshot.write().unwrap().ended = true;
                break;
            }
        };
        if fault_id != current_fault {
            tracing::info!(
                from = current_fault,
                to = fault_id,
                t = sample.t(),
                "active fault changed; alarm reset"
            );
            monitor.reset();
            current_fault = fault_id;
        }
        let observation = match monitor.observe(&sample) {
            Ok(o) => o,
            Err(e) => {
                tracing::error!(error = %e, t = sample.t(), "sample rejected by monitor");
                continue;
            }
        };
        {
            let mut snap = snapshot.write().unwrap();
            snap.active_fault = fault_id;
            snap.latest_sample = Some(sample.clone());
            snap.latest_point = Some(observation.point);
            snap.alarm = monitor.state();
            if snap.history.len() == snap.history_len {
                snap.history.pop_front();
            }
            snap.history.push_back(observation.point);
        }
        publish(ServiceEvent::Sample(SamplePayload {
            fault_id,
            t: sample.t(),
            values: sample.values().to_vec(),
        }));
        publish(ServiceEvent::T2(observation.point));
        if let Some(alarm) = observation.alarm {
            tracing::warn!(
                fault_id,
                alarm_t = alarm.alarm_t,
                t2 = alarm.t2,
                "alarm confirmed"
            );
            publish(ServiceEvent::Alarm(AlarmPayload {
                fault_id,
                event: alarm.clone(),
            }));
            let explainer = Arc::clone(&explainer);
            let events = events.clone();
            tokio::spawn(async move {
                let _permit = explainer.pool.acquire().await;
                let report = Arc::new(explainer.explain(fault_id, alarm).await);
                if let Some(log) = &explainer.report_log {
                    if let Err(e) = log.append(report.as_ref()) {
                        tracing::error!(error = %e, "report log write failed");
                    }
                }
                explainer.reports.write().unwrap().push(Arc::clone(&report));
                let _ = events.send(Arc::new(ServiceEvent::Report(report)));
            });
        }
    }
}
