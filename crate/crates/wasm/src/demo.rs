//! Plain-Rust operations behind the browser bindings. Requests and
//! responses are JSON-shaped structs so the page needs no schema glue.

use hazborrow::borrowing::{
    borrowing_profile, prior_weight_from_xi, xi_from_prior_weight, BorrowModel, BorrowingProfile,
    BorrowingSpec,
};
use hazborrow::posterior::{
    predictive_hazard, predictive_survival, smooth_hazard_historical, summarize_fixed, Curve,
    FixedDraws, SummaryRow,
};
use hazborrow::sampler::{run_chain, ChainConfig, TuningParams};
use hazborrow::simulate::{simulate_trial, BaselineHazard, SimSpec};
use hazborrow::Result;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct ProfileQuery {
    pub p_0: Vec<f64>,
    pub b_tau: f64,
    pub d_tau: f64,
    pub sse_max: f64,
    pub points: usize,
}

impl Default for ProfileQuery {
    fn default() -> Self {
        Self {
            p_0: vec![0.5, 0.8, 0.9],
            b_tau: 0.001,
            d_tau: 1.0,
            sse_max: 0.25,
            points: 101,
        }
    }
}

fn mixture(p_0: f64, b_tau: f64, d_tau: f64) -> BorrowingSpec {
    BorrowingSpec {
        model: BorrowModel::Mix,
        a_tau: 1.0,
        b_tau,
        c_tau: 1.0,
        d_tau,
        p_0,
    }
}

/// Lump weight against the squared difference, one curve per `p_0`.
pub fn profiles(q: &ProfileQuery) -> Result<Vec<BorrowingProfile>> {
    let points = q.points.clamp(2, 2001);
    let grid: Vec<f64> = (0..points)
        .map(|i| q.sse_max * i as f64 / (points - 1) as f64)
        .collect();
    q.p_0
        .iter()
        .map(|&p| borrowing_profile(&mixture(p, q.b_tau, q.d_tau), &grid, 1))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Calibration {
    pub p_0: f64,
    pub xi: f64,
    pub xi_squared: f64,
}

/// Tolerable difference for a prior lump weight.
pub fn calibrate_from_p0(p_0: f64, b_tau: f64, d_tau: f64) -> Result<Calibration> {
    let xi = xi_from_prior_weight(p_0, b_tau, d_tau)?;
    Ok(Calibration {
        p_0,
        xi,
        xi_squared: xi * xi,
    })
}

/// Prior lump weight for a tolerable difference.
pub fn calibrate_from_xi(xi: f64, b_tau: f64, d_tau: f64) -> Result<Calibration> {
    let p_0 = prior_weight_from_xi(xi, b_tau, d_tau)?;
    Ok(Calibration {
        p_0,
        xi,
        xi_squared: xi * xi,
    })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct FitQuery {
    pub n_control: usize,
    pub n_treatment: usize,
    pub n_historical: usize,
    pub beta_trt: f64,
    /// Log hazard ratio of historical against current controls.
    pub historical_shift: f64,
    pub model: BorrowModel,
    pub p_0: f64,
    pub iter: usize,
    pub warmup_iter: usize,
    pub seed: u64,
}

impl Default for FitQuery {
    fn default() -> Self {
        Self {
            n_control: 100,
            n_treatment: 150,
            n_historical: 100,
            beta_trt: -0.5,
            historical_shift: 0.0,
            model: BorrowModel::Mix,
            p_0: 0.8,
            iter: 1500,
            warmup_iter: 500,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FitView {
    pub hazard_control: Curve,
    pub hazard_treatment: Curve,
    pub hazard_historical: Option<Curve>,
    pub survival_control: Curve,
    pub survival_treatment: Curve,
    pub summary: Vec<SummaryRow>,
    pub beta_acceptance: f64,
    pub events_current: usize,
    pub events_historical: usize,
}

/// Iteration cap keeping a browser tab responsive.
pub const MAX_DEMO_ITER: usize = 20_000;

/// Simulates a Weibull trial and fits the chosen borrowing model to it.
pub fn simulate_and_fit(q: &FitQuery) -> Result<FitView> {
    let iter = q.iter.clamp(10, MAX_DEMO_ITER);
    let borrow = q.model != BorrowModel::None;
    let sim = SimSpec {
        n_control: q.n_control,
        n_treatment: q.n_treatment,
        n_historical: if borrow {
            q.n_historical.max(1)
        } else {
            q.n_historical
        },
        hazard: BaselineHazard::Weibull {
            shape: 1.5,
            scale: 0.4,
        },
        beta_trt: q.beta_trt,
        censor: None,
        seed: q.seed,
        historical_shift: q.historical_shift,
    };
    let (current, historical) = simulate_trial(&sim)?;
    let config = ChainConfig {
        iter,
        warmup_iter: q.warmup_iter.min(iter - 1),
        refresh: iter,
        seed: q.seed,
        borrow,
        borrowing: BorrowingSpec {
            p_0: q.p_0,
            ..BorrowingSpec::default()
        }
        .with_model(q.model),
        max_grid: 200,
        ..ChainConfig::default()
    };
    let tuning = TuningParams {
        cprop_beta: 3.25,
        alpha: 0.4,
        pi_b: 0.5,
        ..TuningParams::default()
    };
    let hist = if borrow { historical.as_ref() } else { None };
    let out = run_chain(&current, hist, &config, &tuning)?;

    let level = 0.95;
    let control = vec![0.0; current.p()];
    let treated = vec![1.0; current.p()];
    let summary = summarize_fixed(&FixedDraws::from_output(&out), level)?;
    Ok(FitView {
        hazard_control: predictive_hazard(&out, &control, level)?,
        hazard_treatment: predictive_hazard(&out, &treated, level)?,
        hazard_historical: if borrow {
            Some(smooth_hazard_historical(&out, level)?)
        } else {
            None
        },
        survival_control: predictive_survival(&out, &control, level)?,
        survival_treatment: predictive_survival(&out, &treated, level)?,
        summary: summary.rows,
        beta_acceptance: out.acceptance.beta.first().map_or(f64::NAN, |c| c.rate()),
        events_current: current.event_count(),
        events_historical: hist.map_or(0, |h| h.event_count()),
    })
}
