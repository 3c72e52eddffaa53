//! Statistical core of the TEP monitor: variable catalog, data ingestion,
//! PCA fitting and Hotelling T² monitoring.

pub mod catalog;
pub mod data;
pub mod fdist;
pub mod linalg;
pub mod monitor;
pub mod pca;

pub use catalog::{variable, variable_by_name, variable_catalog, VariableDescriptor, VariableKind};
pub use data::{
    compute_normal_stats, fault_path, load_timeseries, DataError, NormalStats, SampleVector,
    TimeSeries,
};
pub use monitor::{
    contributions, t2_statistic, t2_threshold, top_k_deviations, AlarmEvent, AlarmState,
    AlarmStatus, ContributionVector, FeatureDeviation, Monitor, MonitorConfig, MonitorError,
    Observation, T2Point,
};
pub use pca::{fit_pca, load_model, save_model, standardize, PcaError, PcaModel};
