//! Replays recorded TEP series at a fixed cadence as a stand-in for a live
//! plant. Switching faults splices the new series in at the current cursor,
//! so the emitted time index never jumps.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use tepmon_core::{fault_path, load_timeseries, DataError, SampleVector, TimeSeries};
use tokio::sync::{mpsc, oneshot};
use tokio::time::{interval, MissedTickBehavior};

/// Highest replayable fault id; 0 is normal operation.
pub const MAX_REPLAY_FAULT: u8 = 15;

#[derive(Debug, thiserror::Error)]
pub enum ReplayError {
    #[error("tick interval must be positive")]
    InvalidInterval,
    #[error("unknown fault {0} (expected 0..={MAX_REPLAY_FAULT})")]
    UnknownFault(u8),
    #[error("no dataset for fault {0}")]
    MissingDataset(u8),
    #[error("dataset for fault {fault}: {source}")]
    Data { fault: u8, source: DataError },
    #[error("replay task has stopped")]
    Stopped,
}

#[derive(Debug, Clone)]
pub struct ReplayConfig {
    pub tick_interval: Duration,
    pub data_dir: PathBuf,
    pub start_fault: u8,
    pub loop_at_end: bool,
}

impl ReplayConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        Self {
            tick_interval: Duration::from_millis(100),
            data_dir: data_dir.into(),
            start_fault: 0,
            loop_at_end: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReplayState {
    pub active_fault: u8,
    /// Row of the active series emitted next.
    pub cursor: usize,
    pub emitted: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReplayEvent {
    Sample { fault_id: u8, sample: SampleVector },
    EndOfSeries { fault_id: u8, emitted: usize },
}

/// Synchronous replay state machine; [`start`] drives it from a timer.
#[derive(Debug)]
pub struct ReplayEngine {
    config: ReplayConfig,
    state: ReplayState,
    active: Arc<TimeSeries>,
    cache: HashMap<u8, Arc<TimeSeries>>,
    finished: bool,
}

impl ReplayEngine {
    pub fn new(config: ReplayConfig) -> Result<Self, ReplayError> {
        if config.tick_interval.is_zero() {
            return Err(ReplayError::InvalidInterval);
        }
        let mut cache = HashMap::new();
        let active = load(&config, &mut cache, config.start_fault)?;
        Ok(Self {
            state: ReplayState {
                active_fault: config.start_fault,
                cursor: 0,
                emitted: 0,
            },
            config,
            active,
            cache,
            finished: false,
        })
    }

    pub fn config(&self) -> &ReplayConfig {
        &self.config
    }

    pub fn state(&self) -> ReplayState {
        self.state
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    /// Switches the active series, keeping the cursor (clamped to the new
    /// series' last row). Injecting the active fault is a no-op.
    pub fn inject_fault(&mut self, fault_id: u8) -> Result<ReplayState, ReplayError> {
        if fault_id == self.state.active_fault {
            return Ok(self.state);
        }
        let series = load(&self.config, &mut self.cache, fault_id)?;
        self.state.cursor = self.state.cursor.min(series.len() - 1);
        self.state.active_fault = fault_id;
        self.active = series;
        self.finished = false;
        tracing::info!(fault_id, cursor = self.state.cursor, "fault injected");
        Ok(self.state)
    }

    /// Next event, or `None` once the end of a non-looping series was
    /// reported.
    pub fn next_event(&mut self) -> Option<ReplayEvent> {
        if self.finished {
            return None;
        }
        if self.state.cursor >= self.active.len() {
            if self.config.loop_at_end {
                self.state.cursor = 0;
            } else {
                self.finished = true;
                return Some(ReplayEvent::EndOfSeries {
                    fault_id: self.state.active_fault,
                    emitted: self.state.emitted,
                });
            }
        }
        let sample = self.active.samples()[self.state.cursor].with_t(self.state.emitted);
        self.state.cursor += 1;
        self.state.emitted += 1;
        Some(ReplayEvent::Sample {
            fault_id: self.state.active_fault,
            sample,
        })
    }
}

fn load(
    config: &ReplayConfig,
    cache: &mut HashMap<u8, Arc<TimeSeries>>,
    fault_id: u8,
) -> Result<Arc<TimeSeries>, ReplayError> {
    if fault_id > MAX_REPLAY_FAULT {
        return Err(ReplayError::UnknownFault(fault_id));
    }
    if let Some(s) = cache.get(&fault_id) {
        return Ok(Arc::clone(s));
    }
    let series = match load_timeseries(&fault_path(&config.data_dir, fault_id), fault_id) {
        Ok(s) => Arc::new(s),
        Err(DataError::MissingFile(_)) => return Err(ReplayError::MissingDataset(fault_id)),
        Err(source) => {
            return Err(ReplayError::Data {
                fault: fault_id,
                source,
            })
        }
    };
    cache.insert(fault_id, Arc::clone(&series));
    Ok(series)
}

enum Command {
    Inject(u8, oneshot::Sender<Result<ReplayState, ReplayError>>),
    State(oneshot::Sender<ReplayState>),
    Stop,
}

/// Cloneable control endpoint of a running replay task.
#[derive(Debug, Clone)]
pub struct ReplayControl {
    tx: mpsc::Sender<Command>,
}

impl std::fmt::Debug for Command {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Command::Inject(id, _) => write!(f, "Inject({id})"),
            Command::State(_) => f.write_str("State"),
            Command::Stop => f.write_str("Stop"),
        }
    }
}

impl ReplayControl {
    pub async fn inject_fault(&self, fault_id: u8) -> Result<ReplayState, ReplayError> {
        let (reply, rx) = oneshot::channel();
        self.tx
            .send(Command::Inject(fault_id, reply))
            .await
            .map_err(|_| ReplayError::Stopped)?;
        rx.await.map_err(|_| ReplayError::Stopped)?
    }

    pub async fn state(&self) -> Result<ReplayState, ReplayError> {
        let (reply, rx) = oneshot::channel();
        self.tx
            .send(Command::State(reply))
            .await
            .map_err(|_| ReplayError::Stopped)?;
        rx.await.map_err(|_| ReplayError::Stopped)
    }

    pub async fn stop(&self) {
        let _ = self.tx.send(Command::Stop).await;
    }
}

pub struct ReplayHandle {
    pub events: mpsc::Receiver<ReplayEvent>,
    pub control: ReplayControl,
    pub task: tokio::task::JoinHandle<()>,
}

const EVENT_BUFFER: usize = 4096;

/// Spawns the replay task. One event is produced per tick; the task exits
/// after `EndOfSeries`, on `stop`, or when the event receiver is dropped.
pub fn start(config: ReplayConfig) -> Result<ReplayHandle, ReplayError> {
    let mut engine = ReplayEngine::new(config)?;
    let (event_tx, events) = mpsc::channel(EVENT_BUFFER);
    let (tx, mut commands) = mpsc::channel(32);
    let period = engine.config().tick_interval;
    let task = tokio::spawn(async move {
        let mut ticker = interval(period);
        ticker.set_missed_tick_behavior(MissedTickBehavior::Burst);
        loop {
            tokio::select! {
                biased;
                cmd = commands.recv() => match cmd {
                    Some(Command::Inject(id, reply)) => {
                        let _ = reply.send(engine.inject_fault(id));
                    }
                    Some(Command::State(reply)) => {
                        let _ = reply.send(engine.state());
                    }
                    Some(Command::Stop) | None => break,
                },
                _ = ticker.tick() => {
                    let Some(event) = engine.next_event() else { break };
                    let end = matches!(event, ReplayEvent::EndOfSeries { .. });
                    if event_tx.send(event).await.is_err() || end {
                        break;
                    }
                }
            }
        }
    });
    Ok(ReplayHandle {
        events,
        control: ReplayControl { tx },
        task,
    })
}
