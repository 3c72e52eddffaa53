//! Standardization, PCA fitting by eigendecomposition of the covariance
//! matrix, and model persistence.

use serde::{Deserialize, Serialize};

use crate::catalog::NUM_VARIABLES;
use crate::data::{compute_normal_stats, DataError, NormalStats, TimeSeries};
use crate::fdist::DomainError;
use crate::linalg::{eig_sym, EigenDecomposition, LinalgError, Matrix};
use crate::monitor::t2_threshold;

/// Current persisted model schema.
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum PcaError {
    #[error("every column has (near) zero variance")]
    AllColumnsDegenerate,
    #[error("statistics cover {found} variables, expected {NUM_VARIABLES}")]
    DimensionMismatch { found: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("retained component {index} has non-positive eigenvalue {value:e}")]
    DegenerateSpectrum { index: usize, value: f64 },
    #[error("{n} samples cannot support {a} components (need n > a)")]
    InsufficientSamples { n: usize, a: usize },
    #[error("unsupported model schema version {found:?} (expected {MODEL_VERSION})")]
    SchemaMismatch { found: Option<u64> },
    #[error("corrupt model document: {0}")]
    CorruptDocument(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// Standardized data restricted to columns with non-zero variance.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizedMatrix {
    pub data: Matrix,
    /// Retained column → original variable id.
    pub column_map: Vec<usize>,
    /// Mean and standard deviation of the retained columns.
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl StandardizedMatrix {
    pub fn rows(&self) -> usize {
        self.data.rows()
    }

    pub fn cols(&self) -> usize {
        self.data.cols()
    }
}

/// A column is kept when its std exceeds 1e-12 of its mean magnitude
/// (absolute 1e-12 when the mean is exactly zero).
pub fn is_degenerate(mean: f64, std: f64) -> bool {
    let floor = if mean == 0.0 {
        1e-12
    } else {
        1e-12 * mean.abs()
    };
    std <= floor
}

/// Original ids of the columns retained under `stats`.
pub fn retained_columns(stats: &NormalStats) -> Vec<usize> {
    (0..stats.mean.len())
        .filter(|&j| !is_degenerate(stats.mean[j], stats.std[j]))
        .collect()
}

pub fn standardize(ts: &TimeSeries, stats: &NormalStats) -> Result<StandardizedMatrix, PcaError> {
    if stats.mean.len() != NUM_VARIABLES || stats.std.len() != NUM_VARIABLES {
        return Err(PcaError::DimensionMismatch {
            found: stats.mean.len().min(stats.std.len()),
        });
    }
    let column_map = retained_columns(stats);
    if column_map.is_empty() {
        return Err(PcaError::AllColumnsDegenerate);
    }
    let mean: Vec<f64> = column_map.iter().map(|&j| stats.mean[j]).collect();
    let std: Vec<f64> = column_map.iter().map(|&j| stats.std[j]).collect();
    let m = column_map.len();
    let mut data = Matrix::zeros(ts.len(), m);
    for (i, sample) in ts.samples().iter().enumerate() {
        let raw = sample.values();
        for (c, &j) in column_map.iter().enumerate() {
            data[(i, c)] = (raw[j] - mean[c]) / std[c];
        }
    }
    Ok(StandardizedMatrix {
        data,
        column_map,
        mean,
        std,
    })
}

/// Sample covariance XᵀX/(n−1) of an already-centered matrix.
pub fn covariance(x: &Matrix) -> Matrix {
    let (n, m) = (x.rows(), x.cols());
    let denom = (n - 1) as f64;
    let mut s = Matrix::zeros(m, m);
    for j in 0..m {
        for k in j..m {
            let mut acc = 0.0;
            for i in 0..n {
                acc += x[(i, j)] * x[(i, k)];
            }
            let v = acc / denom;
            s[(j, k)] = v;
            s[(k, j)] = v;
        }
    }
    s
}

/// Fitted PCA monitoring model.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub alpha: f64,
    pub variance_target: f64,
    /// Retained component count.
    pub a: usize,
    /// Training sample count.
    pub n: usize,
    pub variance_captured: f64,
    pub t2_threshold: f64,
    pub column_map: Vec<usize>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// The `a` largest eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// m×a loading matrix.
    pub loadings: Matrix,
}

/// Smallest k whose cumulative eigenvalue share reaches `target`.
pub fn select_components(eigenvalues: &[f64], target: f64) -> usize {
    let total: f64 = eigenvalues.iter().sum();
    let mut cum = 0.0;
    for (k, &l) in eigenvalues.iter().enumerate() {
        cum += l;
        if cum / total >= target {
            return k + 1;
        }
    }
    eigenvalues.len()
}

fn validate_selection(values: &[f64], a: usize, n: usize) -> Result<(), PcaError> {
    let floor = 1e-12 * values[0];
    if let Some(index) = values[..a].iter().position(|&l| l <= floor) {
        return Err(PcaError::DegenerateSpectrum {
            index,
            value: values[index],
        });
    }
    if n <= a {
        return Err(PcaError::InsufficientSamples { n, a });
    }
    Ok(())
}

pub fn fit_pca(
    x: &StandardizedMatrix,
    variance_target: f64,
    alpha: f64,
) -> Result<PcaModel, PcaError> {
    if !(variance_target > 0.0 && variance_target <= 1.0) {
        return Err(PcaError::InvalidParameter(format!(
            "variance_target {variance_target} outside (0, 1]"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(PcaError::InvalidParameter(format!(
            "alpha {alpha} outside (0, 1)"
        )));
    }
    let n = x.rows();
    if n < 2 {
        return Err(PcaError::InsufficientSamples { n, a: 1 });
    }
    let s = covariance(&x.data);
    let EigenDecomposition { values, vectors } = eig_sym(&s)?;

    let total: f64 = values.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(PcaError::DegenerateSpectrum {
            index: 0,
            value: total,
        });
    }
    let a = select_components(&values, variance_target);
    validate_selection(&values, a, n)?;
    let captured: f64 = values[..a].iter().sum::<f64>() / total;

    let m = x.cols();
    let mut loadings = Matrix::zeros(m, a);
    for j in 0..m {
        for i in 0..a {
            loadings[(j, i)] = vectors[(j, i)];
        }
    }
    Ok(PcaModel {
        alpha,
        variance_target,
        a,
        n,
        variance_captured: captured,
        t2_threshold: t2_threshold(a, n, alpha)?,
        column_map: x.column_map.clone(),
        mean: x.mean.clone(),
        std: x.std.clone(),
        eigenvalues: values[..a].to_vec(),
        loadings,
    })
}

impl PcaModel {
    /// Computes normal statistics from `normal`, standardizes it and fits.
    pub fn fit_normal(
        normal: &TimeSeries,
        variance_target: f64,
        alpha: f64,
    ) -> Result<Self, PcaError> {
        let stats = compute_normal_stats(normal)?;
        let x = standardize(normal, &stats)?;
        fit_pca(&x, variance_target, alpha)
    }

    /// Number of retained variables.
    pub fn m(&self) -> usize {
        self.column_map.len()
    }

    /// Standardized retained values of a raw 52-value sample.
    pub fn standardize_values(&self, raw: &[f64]) -> Vec<f64> {
        self.column_map
            .iter()
            .enumerate()
            .map(|(c, &j)| (raw[j] - self.mean[c]) / self.std[c])
            .collect()
    }

    /// Scores t = Pᵀx.
    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        (0..self.a)
            .map(|i| (0..self.m()).map(|j| self.loadings[(j, i)] * x[j]).sum())
            .collect()
    }

    /// Normal-operation mean of an original variable, if retained.
    pub fn normal_mean(&self, variable_id: usize) -> Option<f64> {
        self.column_map
            .iter()
            .position(|&j| j == variable_id)
            .map(|c| self.mean[c])
    }

    pub fn to_json(&self) -> String {
        let doc = ModelDocument {
            version: MODEL_VERSION,
            alpha: self.alpha,
            variance_target: self.variance_target,
            a: self.a,
            n: self.n,
            variance_captured: self.variance_captured,
            t2_threshold: self.t2_threshold,
            column_map: self.column_map.clone(),
            mean: self.mean.clone(),
            std: self.std.clone(),
            eigenvalues: self.eigenvalues.clone(),
            loadings: self.loadings.to_rows(),
        };
        serde_json::to_string_pretty(&doc).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, PcaError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| PcaError::CorruptDocument(e.to_string()))?;
        let version = value.get("version").and_then(serde_json::Value::as_u64);
        if version != Some(u64::from(MODEL_VERSION)) {
            return Err(PcaError::SchemaMismatch { found: version });
        }
        let doc: ModelDocument =
            serde_json::from_value(value).map_err(|e| PcaError::CorruptDocument(e.to_string()))?;
        doc.into_model()
    }
}

/// Persists a model as a versioned JSON document.
pub fn save_model(model: &PcaModel) -> String {
    model.to_json()
}

pub fn load_model(document: &str) -> Result<PcaModel, PcaError> {
    PcaModel::from_json(document)
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    version: u32,
    alpha: f64,
    variance_target: f64,
    a: usize,
    n: usize,
    variance_captured: f64,
    t2_threshold: f64,
    column_map: Vec<usize>,
    mean: Vec<f64>,
    std: Vec<f64>,
    eigenvalues: Vec<f64>,
    #[serde(rename = "P")]
    loadings: Vec<Vec<f64>>,
}

impl ModelDocument {
    fn into_model(self) -> Result<PcaModel, PcaError> {
        let m = self.column_map.len();
        let corrupt = |msg: &str| Err(PcaError::CorruptDocument(msg.to_owned()));
        if m == 0 || self.mean.len() != m || self.std.len() != m {
            return corrupt("column_map, mean and std lengths disagree");
        }
        if self.column_map.iter().any(|&j| j >= NUM_VARIABLES)
            || self.column_map.windows(2).any(|w| w[0] >= w[1])
        {
            return corrupt("column_map must be strictly increasing variable ids");
        }
        if self.a == 0 || self.eigenvalues.len() != self.a || self.a > m {
            return corrupt("eigenvalue count does not match a");
        }
        if self.loadings.len() != m || self.loadings.iter().any(|r| r.len() != self.a) {
            return corrupt("P must be m x a");
        }
        if self.eigenvalues.iter().any(|&l| l.is_nan() || l <= 0.0)
            || self.std.iter().any(|&s| s.is_nan() || s <= 0.0)
        {
            return corrupt("eigenvalues and std must be positive");
        }
        Ok(PcaModel {
            alpha: self.alpha,
            variance_target: self.variance_target,
            a: self.a,
            n: self.n,
            variance_captured: self.variance_captured,
            t2_threshold: self.t2_threshold,
            column_map: self.column_map,
            mean: self.mean,
            std: self.std,
            eigenvalues: self.eigenvalues,
            loadings: Matrix::from_rows(&self.loadings),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(rows: Vec<Vec<f64>>) -> TimeSeries {
        TimeSeries::from_rows(0, rows).unwrap()
    }

    /// Rows where only the first `k` columns vary.
    fn rows_with(cols: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = cols[0].len();
        (0..n)
            .map(|i| {
                let mut r = vec![1.0; NUM_VARIABLES];
                for (j, c) in cols.iter().enumerate() {
                    r[j] = c[i];
                }
                r
            })
            .collect()
    }

    #[test]
    fn standardize_hand_arithmetic() {
        let stats = NormalStats {
            mean: vec![5.0; NUM_VARIABLES],
            std: vec![2.0; NUM_VARIABLES],
            n: 10,
        };
        let ts = series(vec![vec![7.0; NUM_VARIABLES], vec![5.0; NUM_VARIABLES]]);
        let x = standardize(&ts, &stats).unwrap();
        assert_eq!(x.cols(), NUM_VARIABLES);
        assert!(x.data.row(0).iter().all(|&v| v == 1.0));
        assert!(x.data.row(1).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_variance_columns_dropped() {
        let ts = series(rows_with(&[vec![1.0, 2.0, 3.0], vec![4.0, 4.0, 5.0]]));
        let stats = compute_normal_stats(&ts).unwrap();
        let x = standardize(&ts, &stats).unwrap();
        assert_eq!(x.column_map, vec![0, 1]);
    }

    #[test]
    fn all_degenerate() {
        let ts = series(vec![vec![3.0; NUM_VARIABLES]; 4]);
        let stats = compute_normal_stats(&ts).unwrap();
        assert!(matches!(
            standardize(&ts, &stats),
            Err(PcaError::AllColumnsDegenerate)
        ));
    }

    #[test]
    fn degenerate_threshold_scales_with_mean() {
        assert!(is_degenerate(0.0, 1e-12));
        assert!(!is_degenerate(0.0, 2e-12));
        assert!(is_degenerate(1e6, 1e-7));
        assert!(!is_degenerate(1e6, 1e-5));
    }

    #[test]
    fn perfectly_correlated_pair_gives_one_component() {
        let c: Vec<f64> = (0..20).map(|i| (i as f64).sin()).collect();
        let d: Vec<f64> = c.iter().map(|v| 3.0 * v + 1.0).collect();
        let model = PcaModel::fit_normal(&series(rows_with(&[c, d])), 0.9, 0.01).unwrap();
        assert_eq!(model.a, 1);
        assert_eq!(model.variance_captured, 1.0);
    }

    #[test]
    fn full_retention_on_full_rank() {
        let c1: Vec<f64> = (0..30).map(|i| (i as f64 * 0.7).sin()).collect();
        let c2: Vec<f64> = (0..30).map(|i| (i as f64 * 1.3).cos()).collect();
        let c3: Vec<f64> = (0..30).map(|i| ((i * i) % 7) as f64).collect();
        let model = PcaModel::fit_normal(&series(rows_with(&[c1, c2, c3])), 1.0, 0.01).unwrap();
        assert_eq!(model.a, 3);
    }

    #[test]
    fn select_components_is_minimal() {
        let l = [5.0, 3.0, 1.0, 1.0];
        assert_eq!(select_components(&l, 0.5), 1);
        assert_eq!(select_components(&l, 0.8), 2);
        assert_eq!(select_components(&l, 0.81), 3);
        assert_eq!(select_components(&l, 1.0), 4);
    }

    #[test]
    fn selection_validation() {
        assert!(validate_selection(&[3.0, 1.0, 0.0], 2, 10).is_ok());
        assert!(matches!(
            validate_selection(&[3.0, 1.0, 0.0], 3, 10),
            Err(PcaError::DegenerateSpectrum { index: 2, .. })
        ));
        assert!(matches!(
            validate_selection(&[3.0, 1.0, 0.5], 3, 3),
            Err(PcaError::InsufficientSamples { n: 3, a: 3 })
        ));
    }

    #[test]
    fn three_points_span_two_components() {
        let c1 = vec![0.0, 1.0, 0.0];
        let c2 = vec![0.0, 0.0, 1.0];
        let c3 = vec![1.0, 0.0, 0.0];
        let model = PcaModel::fit_normal(&series(rows_with(&[c1, c2, c3])), 1.0, 0.01).unwrap();
        assert_eq!(model.a, 2);
    }

    #[test]
    fn parameter_validation() {
        let c: Vec<f64> = (0..10).map(f64::from).collect();
        let ts = series(rows_with(&[c]));
        let stats = compute_normal_stats(&ts).unwrap();
        let x = standardize(&ts, &stats).unwrap();
        assert!(fit_pca(&x, 0.0, 0.01).is_err());
        assert!(fit_pca(&x, 1.1, 0.01).is_err());
        assert!(fit_pca(&x, 0.9, 1.0).is_err());
        assert!(fit_pca(&x, 0.9, 0.0).is_err());
    }

    #[test]
    fn unknown_version_rejected() {
        let c: Vec<f64> = (0..10).map(|i| (i as f64).sqrt()).collect();
        let model = PcaModel::fit_normal(&series(rows_with(&[c])), 0.9, 0.01).unwrap();
        let doc = save_model(&model).replace("\"version\": 1", "\"version\": 7");
        assert!(matches!(
            load_model(&doc),
            Err(PcaError::SchemaMismatch { found: Some(7) })
        ));
        assert!(matches!(
            load_model("{}"),
            Err(PcaError::SchemaMismatch { found: None })
        ));
        assert!(matches!(
            load_model("not json"),
            Err(PcaError::CorruptDocument(_))
        ));
        let doc = save_model(&model).replace("\"a\": 1", "\"a\": 2");
        assert!(matches!(
            load_model(&doc),
            Err(PcaError::CorruptDocument(_))
        ));
    }
}
