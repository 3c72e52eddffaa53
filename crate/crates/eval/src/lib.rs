//! Offline evaluation: per-fault detection outcomes with final-step
//! deviations, and LLM root-cause classification with alias-aware scoring.

pub mod aliases;
pub mod detect;
pub mod diagnose;

pub use aliases::{aliases, is_correct, parse_label_list, REFERENCE_ANSWERS, REFERENCE_DETECTED};
pub use detect::{
    format_detection_table, run_detection_eval, write_detection_csv, DetectionParams, DetectionRow,
    DetectionTable, EvalError,
};
pub use diagnose::{
    diagnose_fault, format_diagnosis_table, run_diagnosis_eval, write_diagnosis_csv, DiagnoseError,
    DiagnosisRow, DiagnosisTable,
};
