//! Synthetic two-arm trials with a historical control arm.
//!
//! Event times come from inverse-transform sampling: with `E ~ Exp(1)` a
//! subject with linear predictor `eta` has `H0(t) exp(eta) = E`. Current
//! rows are controls first, then treated; each subject consumes one uniform
//! in row order, current arm before historical.

use rand::Rng;
use rand_distr::Open01;
use serde::{Deserialize, Serialize};

use crate::data::{Design, TrialData};
use crate::error::{Error, Result};
use crate::sampler::chain_rng;

pub const TREATMENT_COLUMN: &str = "X_trt";

/// Baseline hazard of the generating model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineHazard {
    /// `H(t) = (scale t)^shape`; `scale` acts as a rate.
    Weibull { shape: f64, scale: f64 },
    /// Step hazard with interior `cuts`; the last value extends to infinity.
    Piecewise { cuts: Vec<f64>, lambdas: Vec<f64> },
}

impl BaselineHazard {
    fn validate(&self) -> Result<()> {
        match self {
            BaselineHazard::Weibull { shape, scale } => {
                if !(*shape > 0.0 && *scale > 0.0 && shape.is_finite() && scale.is_finite()) {
                    return Err(Error::param("weibull", "shape and scale must be positive"));
                }
            }
            BaselineHazard::Piecewise { cuts, lambdas } => {
                if lambdas.len() != cuts.len() + 1 {
                    return Err(Error::DimensionMismatch {
                        what: "piecewise hazards",
                        expected: cuts.len() + 1,
                        found: lambdas.len(),
                    });
                }
                let mut prev = 0.0;
                for &c in cuts {
                    if !(c > prev && c.is_finite()) {
                        return Err(Error::param("cuts", "must be positive and increasing"));
                    }
                    prev = c;
                }
                if !lambdas.iter().all(|&l| l > 0.0 && l.is_finite()) {
                    return Err(Error::param("lambdas", "must be positive"));
                }
            }
        }
        Ok(())
    }

    pub fn cumulative(&self, t: f64) -> f64 {
        match self {
            BaselineHazard::Weibull { shape, scale } => weibull_cumhaz(t, *shape, *scale),
            BaselineHazard::Piecewise { cuts, lambdas } => {
                let mut total = 0.0;
                let mut lo = 0.0;
                for (j, &l) in lambdas.iter().enumerate() {
                    let hi = cuts.get(j).copied().unwrap_or(f64::INFINITY);
                    if t <= hi {
                        return total + l * (t - lo);
                    }
                    total += l * (hi - lo);
                    lo = hi;
                }
                total
            }
        }
    }

    /// Time at which the cumulative hazard reaches `target`.
    pub fn inverse_cumulative(&self, target: f64) -> f64 {
        match self {
            BaselineHazard::Weibull { shape, scale } => target.powf(1.0 / shape) / scale,
            BaselineHazard::Piecewise { cuts, lambdas } => {
                let mut remaining = target;
                let mut lo = 0.0;
                for (j, &l) in lambdas.iter().enumerate() {
                    let hi = cuts.get(j).copied().unwrap_or(f64::INFINITY);
                    let mass = l * (hi - lo);
                    if remaining <= mass {
                        return lo + remaining / l;
                    }
                    remaining -= mass;
                    lo = hi;
                }
                unreachable!("last interval is unbounded")
            }
        }
    }
}

/// `(scale t)^shape`.
pub fn weibull_cumhaz(t: f64, shape: f64, scale: f64) -> f64 {
    (scale * t).powf(shape)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    pub n_control: usize,
    pub n_treatment: usize,
    pub n_historical: usize,
    pub hazard: BaselineHazard,
    pub beta_trt: f64,
    /// Administrative censoring time.
    #[serde(default)]
    pub censor: Option<f64>,
    pub seed: u64,
    /// Log hazard ratio of the historical controls against the current ones.
    #[serde(default)]
    pub historical_shift: f64,
}

impl Default for SimSpec {
    /// Weibull scenario: 100 current controls, 150 treated, 100 historical
    /// controls, shape 1.5, scale 0.4, log hazard ratio -0.5.
    fn default() -> Self {
        Self {
            n_control: 100,
            n_treatment: 150,
            n_historical: 100,
            hazard: BaselineHazard::Weibull {
                shape: 1.5,
                scale: 0.4,
            },
            beta_trt: -0.5,
            censor: None,
            seed: 1,
            historical_shift: 0.0,
        }
    }
}

impl SimSpec {
    pub fn validate(&self) -> Result<()> {
        self.hazard.validate()?;
        if !self.beta_trt.is_finite() || !self.historical_shift.is_finite() {
            return Err(Error::param("beta_trt", "must be finite"));
        }
        if let Some(c) = self.censor {
            if !(c > 0.0) {
                return Err(Error::param("censor", "must be positive"));
            }
        }
        if self.n_control + self.n_treatment == 0 {
            return Err(Error::EmptyDataset);
        }
        Ok(())
    }
}

fn draw_subject<R: Rng + ?Sized>(
    rng: &mut R,
    hazard: &BaselineHazard,
    eta: f64,
    censor: Option<f64>,
) -> (f64, bool) {
    let u: f64 = rng.sample(Open01);
    let e = -u.ln();
    let t = hazard.inverse_cumulative(e / eta.exp());
    debug_assert!((hazard.cumulative(t) * eta.exp() - e).abs() <= 1e-9 * e.max(1.0));
    match censor {
        Some(c) if t > c => (c, false),
        _ => (t, true),
    }
}

/// Simulated current trial (with an `X_trt` column) and historical
/// controls (no covariates). An arm can fail validation when censoring
/// leaves it without events.
pub fn simulate_trial(spec: &SimSpec) -> Result<(TrialData, Option<TrialData>)> {
    spec.validate()?;
    let mut rng = chain_rng(spec.seed, 0);
    let n = spec.n_control + spec.n_treatment;
    let mut tte = Vec::with_capacity(n);
    let mut event = Vec::with_capacity(n);
    let mut trt = Vec::with_capacity(n);
    for i in 0..n {
        let treated = i >= spec.n_control;
        let eta = if treated { spec.beta_trt } else { 0.0 };
        let (t, e) = draw_subject(&mut rng, &spec.hazard, eta, spec.censor);
        tte.push(t);
        event.push(e);
        trt.push(if treated { 1.0 } else { 0.0 });
    }
    let design = Design::from_columns(n, &[trt])?;
    let current = TrialData::new(tte, event, design, vec![TREATMENT_COLUMN.into()], Some(0))?;
    let historical = if spec.n_historical > 0 {
        let mut tte = Vec::with_capacity(spec.n_historical);
        let mut event = Vec::with_capacity(spec.n_historical);
        for _ in 0..spec.n_historical {
            let (t, e) = draw_subject(&mut rng, &spec.hazard, spec.historical_shift, spec.censor);
            tte.push(t);
            event.push(e);
        }
        Some(TrialData::without_covariates(tte, event)?)
    } else {
        None
    };
    Ok((current, historical))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weibull_cumulative_hazard() {
        assert_eq!(weibull_cumhaz(0.0, 1.5, 0.4), 0.0);
        assert!((weibull_cumhaz(2.5, 1.0, 0.4) - 1.0).abs() < 1e-15);
        assert!((weibull_cumhaz(2.5, 1.5, 0.4) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn piecewise_inverse_round_trip() {
        let h = BaselineHazard::Piecewise {
            cuts: vec![1.0, 2.5],
            lambdas: vec![0.5, 2.0, 0.1],
        };
        for &t in &[0.2, 1.0, 1.7, 2.5, 9.0] {
            let back = h.inverse_cumulative(h.cumulative(t));
            assert!((back - t).abs() < 1e-12);
        }
        assert!((h.cumulative(3.0) - (0.5 + 3.0 + 0.05)).abs() < 1e-12);
    }

    #[test]
    fn default_scenario_shapes() {
        let (cur, hist) = simulate_trial(&SimSpec::default()).unwrap();
        let hist = hist.unwrap();
        assert_eq!(cur.n(), 250);
        assert_eq!(cur.design().column(0).filter(|&x| x == 1.0).count(), 150);
        assert_eq!(cur.column_names(), ["X_trt"]);
        assert_eq!(hist.n(), 100);
        assert_eq!(hist.p(), 0);
        assert_eq!(cur.event_count(), 250);
    }

    #[test]
    fn censoring_caps_follow_up() {
        let spec = SimSpec {
            censor: Some(1.0),
            ..SimSpec::default()
        };
        let (cur, _) = simulate_trial(&spec).unwrap();
        assert!(cur.tte().iter().all(|&t| t <= 1.0));
        assert!(cur
            .tte()
            .iter()
            .zip(cur.event())
            .all(|(&t, &e)| e || t == 1.0));
        assert!(cur.event_count() < 250);
    }

    #[test]
    fn same_seed_same_data() {
        let a = simulate_trial(&SimSpec::default()).unwrap();
        let b = simulate_trial(&SimSpec::default()).unwrap();
        assert_eq!(a.0.tte(), b.0.tte());
        let c = simulate_trial(&SimSpec {
            seed: 2,
            ..SimSpec::default()
        })
        .unwrap();
        assert_ne!(a.0.tte(), c.0.tte());
    }
}
