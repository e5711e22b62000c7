//! Piecewise exponential model: time partitions, per-interval sufficient
//! statistics and the log-likelihood.
//!
//! Interval `j` (zero based) is `(s_j, s_{j+1}]`. A subject contributes time
//! at risk up to `min(y_i, s_{J+1})`; subjects followed beyond the last split
//! contribute exposure truncated there.

use crate::data::TrialData;
use crate::error::{Error, Result};

/// Ordered split points `0 = s_0 < s_1 < ... < s_{J+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimePartition {
    splits: Vec<f64>,
}

impl TimePartition {
    pub fn new(splits: Vec<f64>) -> Result<Self> {
        if splits.len() < 2 {
            return Err(Error::InvalidPartition(
                "need at least the two end points".into(),
            ));
        }
        if splits[0] != 0.0 {
            return Err(Error::InvalidPartition("first split must be 0".into()));
        }
        if splits.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidPartition("non-finite split".into()));
        }
        if splits.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidPartition(
                "splits must be strictly increasing".into(),
            ));
        }
        Ok(Self { splits })
    }

    /// The `J = 0` partition `(0, end)`.
    pub fn single(end: f64) -> Result<Self> {
        Self::new(vec![0.0, end])
    }

    /// Partition with the given interior split points.
    pub fn with_interior(end: f64, interior: &[f64]) -> Result<Self> {
        let mut splits = Vec::with_capacity(interior.len() + 2);
        splits.push(0.0);
        splits.extend_from_slice(interior);
        splits.push(end);
        Self::new(splits)
    }

    pub fn splits(&self) -> &[f64] {
        &self.splits
    }

    /// Interior split count `J`.
    pub fn j(&self) -> usize {
        self.splits.len() - 2
    }

    pub fn intervals(&self) -> usize {
        self.splits.len() - 1
    }

    pub fn end(&self) -> f64 {
        *self.splits.last().expect("partition is never empty")
    }

    pub fn interior(&self) -> &[f64] {
        &self.splits[1..self.splits.len() - 1]
    }

    pub fn interval_bounds(&self, j: usize) -> (f64, f64) {
        (self.splits[j], self.splits[j + 1])
    }

    pub fn interval_length(&self, j: usize) -> f64 {
        self.splits[j + 1] - self.splits[j]
    }

    /// Interval containing `t` under the `(s_j, s_{j+1}]` convention; times
    /// beyond the end map to the last interval.
    pub fn interval_of(&self, t: f64) -> usize {
        let below = self.splits[1..].partition_point(|&s| s < t);
        below.min(self.intervals() - 1)
    }

    /// Interval containing `t` under the half-open `[s_j, s_{j+1})`
    /// convention used for grids; the end point belongs to the last interval.
    pub fn grid_interval_of(&self, t: f64) -> usize {
        let at_or_below = self.splits[1..].partition_point(|&s| s <= t);
        at_or_below.min(self.intervals() - 1)
    }

    pub(crate) fn insert(&mut self, interval: usize, at: f64) {
        debug_assert!(at > self.splits[interval] && at < self.splits[interval + 1]);
        self.splits.insert(interval + 1, at);
    }

    pub(crate) fn remove(&mut self, split_index: usize) -> f64 {
        debug_assert!(split_index >= 1 && split_index <= self.j());
        self.splits.remove(split_index)
    }

    pub(crate) fn set(&mut self, split_index: usize, at: f64) {
        debug_assert!(at > self.splits[split_index - 1] && at < self.splits[split_index + 1]);
        self.splits[split_index] = at;
    }
}

/// Positive interval hazards, one per partition interval.
#[derive(Debug, Clone, PartialEq)]
pub struct HazardVector(Vec<f64>);

impl HazardVector {
    pub fn new(lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::param("lambda", "empty hazard vector"));
        }
        if lambdas.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::param(
                "lambda",
                "hazards must be positive and finite",
            ));
        }
        Ok(Self(lambdas))
    }

    pub fn constant(value: f64, intervals: usize) -> Result<Self> {
        Self::new(vec![value; intervals])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn logs(&self) -> Vec<f64> {
        self.0.iter().map(|l| l.ln()).collect()
    }

    pub(crate) fn values_mut(&mut self) -> &mut Vec<f64> {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for HazardVector {
    type Output = f64;

    fn index(&self, j: usize) -> &f64 {
        &self.0[j]
    }
}

/// Per-interval event counts and (covariate-weighted) exposure.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalStats {
    pub exposure: Vec<f64>,
    pub events: Vec<f64>,
}

impl IntervalStats {
    pub fn total_exposure(&self) -> f64 {
        self.exposure.iter().sum()
    }

    pub fn total_events(&self) -> f64 {
        self.events.iter().sum()
    }
}

/// Exposure and events per interval with exposure weights `exp(x_i' beta)`.
pub fn interval_stats(data: &TrialData, partition: &TimePartition, beta: &[f64]) -> IntervalStats {
    let weights: Vec<f64> = if beta.is_empty() || data.p() == 0 {
        vec![1.0; data.n()]
    } else {
        data.design()
            .linear_predictor(beta)
            .into_iter()
            .map(f64::exp)
            .collect()
    };
    weighted_interval_stats(data.tte(), data.event(), &weights, partition)
}

/// Exposure and events per interval for arbitrary per-subject weights.
pub(crate) fn weighted_interval_stats(
    tte: &[f64],
    event: &[bool],
    weights: &[f64],
    partition: &TimePartition,
) -> IntervalStats {
    let m = partition.intervals();
    let end = partition.end();
    let splits = partition.splits();
    let mut events = vec![0.0; m];
    // Weight of subjects that pass completely through interval j, and the
    // partial exposure of subjects whose follow-up ends inside it.
    let mut ending = vec![0.0; m];
    let mut partial = vec![0.0; m];
    for ((&y, &e), &w) in tte.iter().zip(event).zip(weights) {
        let t = y.min(end);
        let j = partition.interval_of(t);
        ending[j] += w;
        partial[j] += w * (t - splits[j]);
        if e && y <= end {
            events[j] += 1.0;
        }
    }
    let mut exposure = vec![0.0; m];
    let mut through = 0.0;
    for j in (0..m).rev() {
        exposure[j] = through * partition.interval_length(j) + partial[j];
        through += ending[j];
    }
    IntervalStats { exposure, events }
}

/// Log-likelihood of the piecewise exponential proportional hazards model.
pub fn log_likelihood(
    data: &TrialData,
    beta: &[f64],
    partition: &TimePartition,
    lambdas: &HazardVector,
) -> Result<f64> {
    if lambdas.len() != partition.intervals() {
        return Err(Error::DimensionMismatch {
            what: "hazard vector",
            expected: partition.intervals(),
            found: lambdas.len(),
        });
    }
    if !beta.is_empty() && beta.len() != data.p() {
        return Err(Error::DimensionMismatch {
            what: "regression coefficients",
            expected: data.p(),
            found: beta.len(),
        });
    }
    let stats = interval_stats(data, partition, beta);
    let linear = event_linear_term(data, beta, partition.end());
    let value = log_likelihood_from_stats(&stats, lambdas.as_slice()) + linear;
    if !value.is_finite() {
        return Err(Error::NonFinite {
            what: "log-likelihood".into(),
        });
    }
    Ok(value)
}

/// `sum eta_i` over events observed by the endpoint; later events are censored there.
pub(crate) fn event_linear_term(data: &TrialData, beta: &[f64], end: f64) -> f64 {
    if beta.is_empty() {
        return 0.0;
    }
    data.design()
        .linear_predictor(beta)
        .iter()
        .zip(data.event().iter().zip(data.tte()))
        .filter(|(_, (&e, &y))| e && y <= end)
        .map(|(eta, _)| eta)
        .sum()
}

/// Baseline part `sum_j d_j log(lambda_j) - lambda_j E_j`.
pub(crate) fn log_likelihood_from_stats(stats: &IntervalStats, lambdas: &[f64]) -> f64 {
    stats
        .events
        .iter()
        .zip(&stats.exposure)
        .zip(lambdas)
        .map(|((&d, &e), &l)| {
            let events_term = if d > 0.0 { d * l.ln() } else { 0.0 };
            events_term - l * e
        })
        .sum()
}

/// Integral of the step hazard over `[0, t]`; constant beyond the last split.
pub fn cumulative_hazard(t: f64, partition: &TimePartition, lambdas: &[f64]) -> f64 {
    let splits = partition.splits();
    let mut total = 0.0;
    for (j, &l) in lambdas.iter().enumerate() {
        let lo = splits[j];
        if t <= lo {
            break;
        }
        total += l * (splits[j + 1].min(t) - lo);
    }
    total
}

/// Baseline cumulative hazard at `min(y_i, s_{J+1})` for every subject.
pub(crate) fn subject_cumulative_hazards(
    tte: &[f64],
    partition: &TimePartition,
    lambdas: &[f64],
) -> Vec<f64> {
    let splits = partition.splits();
    let mut prefix = Vec::with_capacity(lambdas.len() + 1);
    prefix.push(0.0);
    for (j, &l) in lambdas.iter().enumerate() {
        prefix.push(prefix[j] + l * partition.interval_length(j));
    }
    let end = partition.end();
    tte.iter()
        .map(|&y| {
            let t = y.min(end);
            let j = partition.interval_of(t);
            prefix[j] + lambdas[j] * (t - splits[j])
        })
        .collect()
}
