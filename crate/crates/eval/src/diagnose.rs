//! Root-cause classification of detected faults through an LLM backend.

use std::io::Write;

use tepmon_core::FeatureDeviation;
use tepmon_explain::parse::labels;
use tepmon_explain::{
    build_fault_prompt, generate_explanation, FaultEvent, LlmBackend, PromptError, PromptLibrary,
    PromptMode, ReportStatus, RetryPolicy,
};

use crate::aliases::is_correct;
use crate::detect::{DetectionTable, EvalError};

#[derive(Debug, thiserror::Error)]
pub enum DiagnoseError {
    #[error("backend unavailable for fault {fault}: {message}")]
    BackendUnavailable { fault: u8, message: String },
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Output(#[from] EvalError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosisRow {
    pub fault_id: u8,
    pub mode: PromptMode,
    pub model_name: String,
    pub labels: Vec<u8>,
    pub titles: Vec<String>,
    /// Alias-aware; `None` in general-reasoning mode, where candidates are
    /// free text without fault labels.
    pub correct: Option<bool>,
    pub raw_response: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosisTable {
    pub rows: Vec<DiagnosisRow>,
}

impl DiagnosisTable {
    /// (correct, scored) over rows that carry a score.
    pub fn accuracy(&self) -> (usize, usize) {
        let scored: Vec<bool> = self.rows.iter().filter_map(|r| r.correct).collect();
        (scored.iter().filter(|&&c| c).count(), scored.len())
    }
}

/// Classifies one fault from its deviation snapshot.
pub async fn diagnose_fault(
    fault_id: u8,
    deviations: &[FeatureDeviation],
    mode: PromptMode,
    prompts: &PromptLibrary,
    backend: &dyn LlmBackend,
    retry: RetryPolicy,
) -> Result<DiagnosisRow, DiagnoseError> {
    let bundle = build_fault_prompt(deviations, mode, prompts)?;
    let event = FaultEvent {
        alarm_t: 0,
        t2: 0.0,
        threshold: 0.0,
    };
    let report =
        generate_explanation(&bundle, event, deviations.to_vec(), backend, retry, None).await;
    if report.status == ReportStatus::ExplanationFailed {
        return Err(DiagnoseError::BackendUnavailable {
            fault: fault_id,
            message: report.error.unwrap_or_default(),
        });
    }
    let top3 = labels(&report.candidates);
    let correct = match mode {
        PromptMode::RootCausesIncluded => Some(is_correct(fault_id, &top3)),
        PromptMode::GeneralReasoning => None,
    };
    Ok(DiagnosisRow {
        fault_id,
        mode,
        model_name: report.model_name,
        labels: top3,
        titles: report.candidates.into_iter().map(|c| c.title).collect(),
        correct,
        raw_response: report.raw_response,
    })
}

/// Diagnoses every detected fault, sequentially in fault-id order.
pub async fn run_diagnosis_eval(
    detection: &DetectionTable,
    mode: PromptMode,
    prompts: &PromptLibrary,
    backend: &dyn LlmBackend,
    retry: RetryPolicy,
) -> Result<DiagnosisTable, DiagnoseError> {
    let mut rows = Vec::new();
    for row in detection.rows.iter().filter(|r| r.detected) {
        rows.push(diagnose_fault(row.fault_id, &row.top, mode, prompts, backend, retry).await?);
    }
    Ok(DiagnosisTable { rows })
}

pub fn write_diagnosis_csv<W: Write>(table: &DiagnosisTable, out: W) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "fault_id",
        "mode",
        "model_name",
        "top3",
        "titles",
        "correct",
    ])?;
    for r in &table.rows {
        let top3: Vec<String> = r.labels.iter().map(u8::to_string).collect();
        w.write_record([
            r.fault_id.to_string(),
            r.mode.as_str().to_owned(),
            r.model_name.clone(),
            top3.join(","),
            r.titles.join(" | "),
            r.correct.map(|c| c.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(EvalError::from)?;
    Ok(())
}

pub fn format_diagnosis_table(table: &DiagnosisTable) -> String {
    let mut s = String::from("fault  top3        correct  model\n");
    for r in &table.rows {
        let top3: Vec<String> = r.labels.iter().map(u8::to_string).collect();
        s.push_str(&format!(
            "{:>5}  {:<10}  {:<7}  {}\n",
            r.fault_id,
            top3.join(","),
            r.correct.map_or("-".to_owned(), |c| c.to_string()),
            r.model_name,
        ));
    }
    let (correct, scored) = table.accuracy();
    if scored > 0 {
        s.push_str(&format!("accuracy: {correct}/{scored}\n"));
    }
    s
}
