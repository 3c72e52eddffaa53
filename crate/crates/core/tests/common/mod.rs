#![allow(dead_code)]

use std::path::PathBuf;

use tepmon_core::{compute_normal_stats, fault_path, load_timeseries, PcaModel, TimeSeries};

pub const ALPHA: f64 = 0.01;
pub const TARGET: f64 = 0.90;

/// Dataset directory: `TEP_DATA_DIR` or the workspace `data/` folder.
pub fn data_dir() -> PathBuf {
    std::env::var_os("TEP_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data"))
}

pub fn series(fault: u8) -> TimeSeries {
    load_timeseries(&fault_path(&data_dir(), fault), fault).expect("dataset present")
}

pub fn normal_model() -> PcaModel {
    let normal = series(0);
    assert!(compute_normal_stats(&normal).is_ok());
    PcaModel::fit_normal(&normal, TARGET, ALPHA).expect("fit")
}
