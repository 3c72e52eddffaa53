//! Offline detection: fit on the normal series, run every fault series
//! through the monitor, and snapshot the top deviations at the last step.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use tepmon_core::{
    contributions, fault_path, load_timeseries, top_k_deviations, DataError, FeatureDeviation,
    Monitor, MonitorConfig, MonitorError, PcaError, PcaModel, TimeSeries,
};

use crate::aliases::reference_detected;

pub const FAULT_IDS: std::ops::RangeInclusive<u8> = 1..=15;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("dataset for fault {fault} unavailable: {source}")]
    MissingDataset { fault: u8, source: DataError },
    #[error(transparent)]
    Pca(#[from] PcaError),
    #[error("fault {fault}: {source}")]
    Monitor { fault: u8, source: MonitorError },
    #[error("writing output: {0}")]
    Io(#[from] std::io::Error),
    #[error("writing CSV: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionParams {
    pub alpha: f64,
    pub variance_target: f64,
    pub top_k: usize,
    pub consecutive_required: usize,
    pub rank_by_abs: bool,
}

impl Default for DetectionParams {
    fn default() -> Self {
        Self {
            alpha: 0.01,
            variance_target: 0.90,
            top_k: 6,
            consecutive_required: 6,
            rank_by_abs: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionRow {
    pub fault_id: u8,
    pub detected: bool,
    pub alarm_t: Option<usize>,
    pub a_used: usize,
    pub threshold: f64,
    /// Deviations at the final step of the series.
    pub top: Vec<FeatureDeviation>,
}

impl DetectionRow {
    pub fn matches_reference(&self) -> bool {
        self.detected == reference_detected(self.fault_id)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionTable {
    pub params: DetectionParams,
    pub a_used: usize,
    pub variance_captured: f64,
    pub threshold: f64,
    /// First alarm on the normal series itself, expected to be `None`.
    pub normal_alarm_t: Option<usize>,
    pub rows: Vec<DetectionRow>,
}

impl DetectionTable {
    pub fn row(&self, fault_id: u8) -> Option<&DetectionRow> {
        self.rows.iter().find(|r| r.fault_id == fault_id)
    }

    pub fn divergent(&self) -> Vec<u8> {
        self.rows
            .iter()
            .filter(|r| !r.matches_reference())
            .map(|r| r.fault_id)
            .collect()
    }
}

fn load(data_dir: &Path, fault: u8) -> Result<TimeSeries, EvalError> {
    load_timeseries(&fault_path(data_dir, fault), fault)
        .map_err(|source| EvalError::MissingDataset { fault, source })
}

/// First alarm over the whole series and the deviations at its last step.
fn scan(
    model: &Arc<PcaModel>,
    ts: &TimeSeries,
    params: &DetectionParams,
) -> Result<(Option<usize>, Vec<FeatureDeviation>), MonitorError> {
    let mut monitor = Monitor::new(
        Arc::clone(model),
        MonitorConfig {
            top_k: params.top_k,
            consecutive_required: params.consecutive_required,
            rank_by_abs: params.rank_by_abs,
        },
    );
    let mut alarm_t = None;
    for sample in ts.samples() {
        let obs = monitor.observe(sample)?;
        if alarm_t.is_none() {
            alarm_t = obs.alarm.map(|a| a.alarm_t);
        }
    }
    let top = match ts.samples().last() {
        Some(last) => {
            let cont = contributions(model, last)?;
            let k = params.top_k.min(model.m());
            top_k_deviations(model, last, &cont, k, params.rank_by_abs)?
        }
        None => Vec::new(),
    };
    Ok((alarm_t, top))
}

pub fn run_detection_eval(
    data_dir: &Path,
    params: DetectionParams,
) -> Result<DetectionTable, EvalError> {
    let normal = load(data_dir, 0)?;
    let model = Arc::new(PcaModel::fit_normal(
        &normal,
        params.variance_target,
        params.alpha,
    )?);
    let (normal_alarm_t, _) =
        scan(&model, &normal, &params).map_err(|source| EvalError::Monitor { fault: 0, source })?;

    let rows = FAULT_IDS
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|fault| {
            let ts = load(data_dir, fault)?;
            let (alarm_t, top) = scan(&model, &ts, &params)
                .map_err(|source| EvalError::Monitor { fault, source })?;
            Ok(DetectionRow {
                fault_id: fault,
                detected: alarm_t.is_some(),
                alarm_t,
                a_used: model.a,
                threshold: model.t2_threshold,
                top,
            })
        })
        .collect::<Result<Vec<_>, EvalError>>()?;

    Ok(DetectionTable {
        params,
        a_used: model.a,
        variance_captured: model.variance_captured,
        threshold: model.t2_threshold,
        normal_alarm_t,
        rows,
    })
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// One row per fault; undefined percent changes are written as `undefined`.
pub fn write_detection_csv<W: Write>(table: &DetectionTable, out: W) -> Result<(), EvalError> {
    let k = table.params.top_k;
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = [
        "fault_id",
        "detected",
        "alarm_t",
        "a_used",
        "threshold",
        "reference_detected",
        "matches_reference",
    ]
    .map(String::from)
    .to_vec();
    for r in 1..=k {
        for field in ["tag", "name", "percent_change", "contribution"] {
            header.push(format!("top{r}_{field}"));
        }
    }
    w.write_record(&header)?;
    for row in &table.rows {
        let mut rec = vec![
            row.fault_id.to_string(),
            row.detected.to_string(),
            opt(row.alarm_t),
            row.a_used.to_string(),
            row.threshold.to_string(),
            reference_detected(row.fault_id).to_string(),
            row.matches_reference().to_string(),
        ];
        for r in 0..k {
            match row.top.get(r) {
                Some(d) => rec.extend([
                    d.variable.tag.to_owned(),
                    d.variable.name.to_owned(),
                    d.percent_change
                        .map_or_else(|| "undefined".to_owned(), |p| p.to_string()),
                    d.contribution.to_string(),
                ]),
                None => rec.extend(std::iter::repeat_n(String::new(), 4)),
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn format_detection_table(table: &DetectionTable) -> String {
    let mut s = format!(
        "a = {} ({:.2}% variance), T2 threshold = {:.4}, normal series alarm: {}\n",
        table.a_used,
        100.0 * table.variance_captured,
        table.threshold,
        table
            .normal_alarm_t
            .map_or("none".to_owned(), |t| format!("t = {t}")),
    );
    s.push_str("fault  detected  alarm_t  reference  top deviations at final step\n");
    for row in &table.rows {
        let top: Vec<String> = row
            .top
            .iter()
            .map(|d| match d.percent_change {
                Some(p) => format!("{} {:+.2}%", d.variable.name, p),
                None => format!("{} (undefined)", d.variable.name),
            })
            .collect();
        s.push_str(&format!(
            "{:>5}  {:<8}  {:>7}  {:<9}  {}{}\n",
            row.fault_id,
            row.detected,
            opt(row.alarm_t),
            if reference_detected(row.fault_id) {
                "detected"
            } else {
                "\\"
            },
            top.join("; "),
            if row.matches_reference() {
                ""
            } else {
                "  [DIVERGES]"
            },
        ));
    }
    let divergent = table.divergent();
    if !divergent.is_empty() {
        s.push_str(&format!("divergent from reference: {divergent:?}\n"));
    }
    s
}
