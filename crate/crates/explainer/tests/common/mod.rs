#![allow(dead_code)]

use tepmon_core::{variable_by_name, FeatureDeviation};
use tepmon_explain::{FaultEvent, FaultReport, PromptMode, ReportStatus};

/// Fault 7 style deviations (name, percent change).
pub const FAULT7: [(&str, f64); 6] = [
    ("Stripper Pressure", -3.00),
    ("A and C Feed", -8.90),
    ("Reactor Pressure", -3.49),
    ("Product Separator Pressure", -3.69),
    ("A and C Feed Load", 13.12),
    ("Compressor Work", -3.58),
];

pub fn deviations(spec: &[(&str, f64)]) -> Vec<FeatureDeviation> {
    spec.iter()
        .enumerate()
        .map(|(i, &(name, pct))| {
            let mean = 100.0 + i as f64;
            let current = mean * (1.0 + pct / 100.0);
            FeatureDeviation {
                variable: *variable_by_name(name).unwrap(),
                current_value: current,
                normal_mean: mean,
                percent_change: Some(pct),
                contribution: 10.0 - i as f64,
            }
        })
        .collect()
}

pub fn report(id: &str, text: &str) -> FaultReport {
    FaultReport {
        id: id.into(),
        fault_id: Some(7),
        fault_event: FaultEvent {
            alarm_t: 125,
            t2: 812.5,
            threshold: 41.5,
        },
        deviations: deviations(&FAULT7),
        mode: PromptMode::RootCausesIncluded,
        raw_response: text.into(),
        candidates: Vec::new(),
        model_name: "stub".into(),
        created_at: chrono::Utc::now(),
        status: ReportStatus::Complete,
        error: None,
        attempts: 1,
    }
}
