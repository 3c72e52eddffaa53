//! Hotelling T² monitoring: statistic, control limit, contribution
//! decomposition, top-k deviation reports and the consecutive-exceedance
//! alarm rule.

use std::cmp::Ordering;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::catalog::{variable, VariableDescriptor, NUM_VARIABLES};
use crate::data::SampleVector;
use crate::fdist::{f_quantile, DomainError};
use crate::pca::PcaModel;

/// Default number of consecutive exceedances that confirm an alarm.
pub const DEFAULT_CONSECUTIVE: usize = 6;
/// Default number of reported deviations.
pub const DEFAULT_TOP_K: usize = 6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MonitorError {
    #[error("sample contains non-finite values or produced a non-finite statistic")]
    NonFiniteInput,
    #[error("expected {NUM_VARIABLES} values, got {0}")]
    WrongArity(usize),
    #[error("sample t={got} does not follow t={last}")]
    OutOfOrderSample { last: usize, got: usize },
    #[error("k={k} outside 1..={m}")]
    InvalidK { k: usize, m: usize },
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// Rational factor a(n−1)(n+1)/(n(n−a)) of the control limit.
pub fn t2_prefactor(a: usize, n: usize) -> f64 {
    let (a, n) = (a as f64, n as f64);
    a * (n - 1.0) * (n + 1.0) / (n * (n - a))
}

/// Upper control limit of T² for `a` components and `n` training samples.
pub fn t2_threshold(a: usize, n: usize, alpha: f64) -> Result<f64, DomainError> {
    if a == 0 || n <= a {
        let d2 = n.saturating_sub(a);
        return Err(DomainError::DegreesOfFreedom(a as u32, d2 as u32));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(DomainError::Probability(alpha));
    }
    let q = f_quantile(1.0 - alpha, a as u32, (n - a) as u32)?;
    Ok(t2_prefactor(a, n) * q)
}

fn standardized(model: &PcaModel, raw: &[f64]) -> Result<Vec<f64>, MonitorError> {
    if raw.len() != NUM_VARIABLES {
        return Err(MonitorError::WrongArity(raw.len()));
    }
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(MonitorError::NonFiniteInput);
    }
    Ok(model.standardize_values(raw))
}

/// T² of a standardized, retained-column vector.
pub fn t2_of_standardized(model: &PcaModel, x: &[f64]) -> f64 {
    model
        .scores(x)
        .iter()
        .zip(&model.eigenvalues)
        .map(|(t, l)| t * t / l)
        .sum()
}

/// T² for raw engineering-unit values.
pub fn t2_of_values(model: &PcaModel, raw: &[f64]) -> Result<f64, MonitorError> {
    let x = standardized(model, raw)?;
    let t2 = t2_of_standardized(model, &x);
    if !t2.is_finite() {
        return Err(MonitorError::NonFiniteInput);
    }
    Ok(t2)
}

pub fn t2_statistic(model: &PcaModel, sample: &SampleVector) -> Result<f64, MonitorError> {
    t2_of_values(model, sample.values())
}

/// Per-variable T² contributions, indexed like the model's retained columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContributionVector {
    pub cont: Vec<f64>,
    pub variable_ids: Vec<usize>,
}

impl ContributionVector {
    pub fn total(&self) -> f64 {
        self.cont.iter().sum()
    }

    /// Contribution of an original variable id, if retained.
    pub fn get(&self, variable_id: usize) -> Option<f64> {
        self.variable_ids
            .iter()
            .position(|&j| j == variable_id)
            .map(|c| self.cont[c])
    }
}

pub fn contributions_of_values(
    model: &PcaModel,
    raw: &[f64],
) -> Result<ContributionVector, MonitorError> {
    let x = standardized(model, raw)?;
    let weights: Vec<f64> = model
        .scores(&x)
        .iter()
        .zip(&model.eigenvalues)
        .map(|(t, l)| t / l)
        .collect();
    let cont: Vec<f64> = x
        .iter()
        .enumerate()
        .map(|(j, xj)| {
            let s: f64 = weights
                .iter()
                .enumerate()
                .map(|(i, w)| w * model.loadings[(j, i)])
                .sum();
            xj * s
        })
        .collect();
    if cont.iter().any(|c| !c.is_finite()) {
        return Err(MonitorError::NonFiniteInput);
    }
    Ok(ContributionVector {
        cont,
        variable_ids: model.column_map.clone(),
    })
}

pub fn contributions(
    model: &PcaModel,
    sample: &SampleVector,
) -> Result<ContributionVector, MonitorError> {
    contributions_of_values(model, sample.values())
}

/// 100·(current − mean)/|mean|, undefined when the mean is ~0.
pub fn percent_change(current: f64, normal_mean: f64) -> Option<f64> {
    if normal_mean.abs() > 1e-9 {
        Some(100.0 * (current - normal_mean) / normal_mean.abs())
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureDeviation {
    pub variable: VariableDescriptor,
    pub current_value: f64,
    pub normal_mean: f64,
    /// `None` when the normal mean is too close to zero.
    pub percent_change: Option<f64>,
    pub contribution: f64,
}

/// Retained-column order of the `k` largest contributions.
pub fn rank_contributions(cont: &ContributionVector, rank_by_abs: bool) -> Vec<usize> {
    let key = |c: usize| {
        if rank_by_abs {
            cont.cont[c].abs()
        } else {
            cont.cont[c]
        }
    };
    let mut order: Vec<usize> = (0..cont.cont.len()).collect();
    order.sort_by(|&p, &q| match key(q).total_cmp(&key(p)) {
        Ordering::Equal => cont.variable_ids[p].cmp(&cont.variable_ids[q]),
        o => o,
    });
    order
}

pub fn top_k_deviations(
    model: &PcaModel,
    sample: &SampleVector,
    cont: &ContributionVector,
    k: usize,
    rank_by_abs: bool,
) -> Result<Vec<FeatureDeviation>, MonitorError> {
    let m = cont.cont.len();
    if k == 0 || k > m {
        return Err(MonitorError::InvalidK { k, m });
    }
    let raw = sample.values();
    Ok(rank_contributions(cont, rank_by_abs)
        .into_iter()
        .take(k)
        .map(|c| {
            let id = cont.variable_ids[c];
            let current = raw[id];
            let mean = model.mean[c];
            FeatureDeviation {
                variable: *variable(id).expect("retained id in catalog"),
                current_value: current,
                normal_mean: mean,
                percent_change: percent_change(current, mean),
                contribution: cont.cont[c],
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct T2Point {
    pub t: usize,
    pub t2: f64,
    pub threshold: f64,
    pub exceeds: bool,
    /// Set when this point completes (or extends) a confirmed run.
    pub alarm: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AlarmStatus {
    Normal,
    Pending,
    Alarmed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlarmState {
    pub consecutive: usize,
    pub status: AlarmStatus,
    pub alarm_t: Option<usize>,
    pub last_t: Option<usize>,
    pub required: usize,
}

impl Default for AlarmState {
    fn default() -> Self {
        Self::new(DEFAULT_CONSECUTIVE)
    }
}

impl AlarmState {
    pub fn new(required: usize) -> Self {
        assert!(required >= 1, "consecutive requirement must be >= 1");
        Self {
            consecutive: 0,
            status: AlarmStatus::Normal,
            alarm_t: None,
            last_t: None,
            required,
        }
    }

    /// Advances the state by one observation. Returns true when this
    /// observation confirms the alarm.
    pub fn update(&mut self, t: usize, exceeds: bool) -> Result<bool, MonitorError> {
        if let Some(last) = self.last_t {
            if t <= last {
                return Err(MonitorError::OutOfOrderSample { last, got: t });
            }
        }
        self.last_t = Some(t);
        self.consecutive = if exceeds { self.consecutive + 1 } else { 0 };
        if self.status == AlarmStatus::Alarmed {
            return Ok(false);
        }
        if self.consecutive >= self.required {
            self.status = AlarmStatus::Alarmed;
            self.alarm_t = Some(t);
            Ok(true)
        } else {
            self.status = if self.consecutive > 0 {
                AlarmStatus::Pending
            } else {
                AlarmStatus::Normal
            };
            Ok(false)
        }
    }

    /// Whether the current run length meets the requirement.
    pub fn run_confirmed(&self) -> bool {
        self.consecutive >= self.required
    }

    /// Clears the alarm; time ordering is still enforced afterwards.
    pub fn reset(&mut self) {
        *self = Self {
            last_t: self.last_t,
            ..Self::new(self.required)
        };
    }
}

/// Functional form of [`AlarmState::update`].
pub fn alarm_update(state: AlarmState, point: &T2Point) -> Result<AlarmState, MonitorError> {
    let mut next = state;
    next.update(point.t, point.exceeds)?;
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonitorConfig {
    pub top_k: usize,
    pub consecutive_required: usize,
    pub rank_by_abs: bool,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        Self {
            top_k: DEFAULT_TOP_K,
            consecutive_required: DEFAULT_CONSECUTIVE,
            rank_by_abs: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlarmEvent {
    pub alarm_t: usize,
    pub t2: f64,
    pub threshold: f64,
    pub deviations: Vec<FeatureDeviation>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Observation {
    pub point: T2Point,
    /// Present only on the observation that confirms an alarm.
    pub alarm: Option<AlarmEvent>,
}

/// Stateful monitor: one T² point per sample plus the alarm rule.
#[derive(Debug, Clone)]
pub struct Monitor {
    model: Arc<PcaModel>,
    config: MonitorConfig,
    state: AlarmState,
}

impl Monitor {
    pub fn new(model: Arc<PcaModel>, config: MonitorConfig) -> Self {
        let top_k = config.top_k.min(model.m());
        Self {
            state: AlarmState::new(config.consecutive_required),
            config: MonitorConfig { top_k, ..config },
            model,
        }
    }

    pub fn model(&self) -> &Arc<PcaModel> {
        &self.model
    }

    pub fn state(&self) -> AlarmState {
        self.state
    }

    pub fn reset(&mut self) {
        self.state.reset();
    }

    pub fn observe(&mut self, sample: &SampleVector) -> Result<Observation, MonitorError> {
        let threshold = self.model.t2_threshold;
        let t2 = t2_statistic(&self.model, sample)?;
        let exceeds = t2 > threshold;
        let confirmed = self.state.update(sample.t(), exceeds)?;
        let point = T2Point {
            t: sample.t(),
            t2,
            threshold,
            exceeds,
            alarm: self.state.run_confirmed(),
        };
        let alarm = if confirmed {
            let cont = contributions(&self.model, sample)?;
            let deviations = top_k_deviations(
                &self.model,
                sample,
                &cont,
                self.config.top_k,
                self.config.rank_by_abs,
            )?;
            Some(AlarmEvent {
                alarm_t: sample.t(),
                t2,
                threshold,
                deviations,
            })
        } else {
            None
        };
        Ok(Observation { point, alarm })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    fn toy_model() -> PcaModel {
        let mut column_map: Vec<usize> = (0..NUM_VARIABLES).collect();
        column_map.truncate(2);
        PcaModel {
            alpha: 0.01,
            variance_target: 0.9,
            a: 1,
            n: 10,
            variance_captured: 0.95,
            t2_threshold: 3.0,
            column_map,
            mean: vec![0.0, 10.0],
            std: vec![1.0, 2.0],
            eigenvalues: vec![2.0],
            loadings: Matrix::from_rows(&[vec![1.0], vec![0.0]]),
        }
    }

    fn raw(x0: f64, x1: f64) -> Vec<f64> {
        let mut v = vec![0.0; NUM_VARIABLES];
        v[0] = x0;
        v[1] = x1;
        v
    }

    #[test]
    fn prefactor_arithmetic() {
        assert_eq!(t2_prefactor(2, 4), 3.75);
    }

    #[test]
    fn threshold_errors() {
        assert!(t2_threshold(3, 3, 0.01).is_err());
        assert!(t2_threshold(0, 3, 0.01).is_err());
        assert!(t2_threshold(1, 3, 1.0).is_err());
        assert!(t2_threshold(2, 3, 0.01).is_ok());
    }

    #[test]
    fn threshold_decreases_with_alpha() {
        let t1 = t2_threshold(5, 100, 0.01).unwrap();
        let t5 = t2_threshold(5, 100, 0.05).unwrap();
        assert!(t1 > t5);
    }

    #[test]
    fn hand_evaluated_t2() {
        let m = toy_model();
        assert_eq!(t2_of_values(&m, &raw(3.0, 10.0)).unwrap(), 4.5);
        assert_eq!(t2_of_values(&m, &raw(0.0, 10.0)).unwrap(), 0.0);
    }

    #[test]
    fn single_component_contributions() {
        let mut m = toy_model();
        let s = 0.5f64.sqrt();
        m.loadings = Matrix::from_rows(&[vec![s], vec![s]]);
        // x = (1, 1): t = √2, t/λ = √2/2, cont_j = (√2/2)(√½)(1) = 0.5
        let c = contributions_of_values(&m, &raw(1.0, 12.0)).unwrap();
        assert!((c.cont[0] - 0.5).abs() < 1e-15);
        assert!((c.cont[1] - 0.5).abs() < 1e-15);
        let t2 = t2_of_values(&m, &raw(1.0, 12.0)).unwrap();
        assert!((c.total() - t2).abs() < 1e-15);
    }

    #[test]
    fn non_finite_and_arity() {
        let m = toy_model();
        assert_eq!(
            t2_of_values(&m, &[1.0; 3]),
            Err(MonitorError::WrongArity(3))
        );
        let mut v = raw(1.0, 1.0);
        v[5] = f64::NAN;
        assert_eq!(t2_of_values(&m, &v), Err(MonitorError::NonFiniteInput));
        assert_eq!(
            contributions_of_values(&m, &v),
            Err(MonitorError::NonFiniteInput)
        );
    }

    #[test]
    fn percent_change_rules() {
        assert_eq!(percent_change(97.0, 100.0), Some(-3.0));
        assert_eq!(percent_change(-2.0, -1.0), Some(-100.0));
        assert_eq!(percent_change(1.0, 0.0), None);
        assert_eq!(percent_change(1.0, 1e-10), None);
    }

    #[test]
    fn ranking_signed_and_abs_with_id_tiebreak() {
        let cont = ContributionVector {
            cont: vec![1.0, -5.0, 3.0, 3.0],
            variable_ids: vec![4, 7, 9, 2],
        };
        assert_eq!(rank_contributions(&cont, false), vec![3, 2, 0, 1]);
        assert_eq!(rank_contributions(&cont, true), vec![1, 3, 2, 0]);
    }

    #[test]
    fn top_k_bounds() {
        let m = toy_model();
        let s = SampleVector::new(0, raw(3.0, 11.0)).unwrap();
        let c = contributions(&m, &s).unwrap();
        assert!(top_k_deviations(&m, &s, &c, 0, false).is_err());
        assert!(top_k_deviations(&m, &s, &c, 3, false).is_err());
        let all = top_k_deviations(&m, &s, &c, 2, false).unwrap();
        assert_eq!(all[0].variable.id, 0);
        assert_eq!(all[1].percent_change, Some(10.0));
        assert_eq!(all[0].percent_change, None);
    }

    #[test]
    fn five_then_reset() {
        let mut s = AlarmState::default();
        for t in 0..5 {
            s.update(t, true).unwrap();
        }
        assert_eq!(s.status, AlarmStatus::Pending);
        s.update(5, false).unwrap();
        assert_eq!(s.status, AlarmStatus::Normal);
        assert_eq!(s.consecutive, 0);
    }

    #[test]
    fn six_from_100_alarms_at_105() {
        let mut s = AlarmState::default();
        let fired: Vec<bool> = (100..106).map(|t| s.update(t, true).unwrap()).collect();
        assert_eq!(fired, vec![false, false, false, false, false, true]);
        assert_eq!(s.status, AlarmStatus::Alarmed);
        assert_eq!(s.alarm_t, Some(105));
        // Absorbing until reset.
        s.update(106, false).unwrap();
        assert_eq!(s.status, AlarmStatus::Alarmed);
        s.reset();
        assert_eq!(s.status, AlarmStatus::Normal);
        assert_eq!(s.alarm_t, None);
    }

    #[test]
    fn out_of_order_rejected() {
        let mut s = AlarmState::default();
        s.update(3, true).unwrap();
        assert_eq!(
            s.update(3, true),
            Err(MonitorError::OutOfOrderSample { last: 3, got: 3 })
        );
        s.reset();
        assert!(s.update(2, false).is_err());
    }

    #[test]
    fn monitor_emits_single_alarm_event() {
        let model = Arc::new(toy_model());
        let mut mon = Monitor::new(model, MonitorConfig::default());
        let mut events = 0;
        for t in 0..10 {
            let s = SampleVector::new(t, raw(10.0, 10.0)).unwrap();
            let obs = mon.observe(&s).unwrap();
            assert!(obs.point.exceeds);
            assert_eq!(obs.point.alarm, t >= 5);
            if let Some(ev) = obs.alarm {
                events += 1;
                assert_eq!(ev.alarm_t, 5);
                assert_eq!(ev.deviations.len(), 2);
            }
        }
        assert_eq!(events, 1);
    }
}
