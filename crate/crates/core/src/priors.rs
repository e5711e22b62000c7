//! Prior log-densities: the number and location of split points, the
//! Gaussian Markov random field on the anchor log baseline hazard, its
//! hyperpriors and the commensurate prior linking current to historical
//! hazards.
//!
//! The GMRF correlation is AR(1), `corr(i, k) = c^|i-k|`, whose precision is
//! tridiagonal; every GMRF quantity here is evaluated in O(J).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::model::TimePartition;

/// Hyperparameters of the split-point and smoothing priors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingSpec {
    /// Poisson rate for the number of interior split points.
    pub phi: f64,
    pub j_max: usize,
    /// Neighbour correlation of the GMRF, in (0, 1).
    pub c_lambda: f64,
    pub a_sigma: f64,
    pub b_sigma: f64,
}

impl Default for SmoothingSpec {
    fn default() -> Self {
        Self {
            phi: 3.0,
            j_max: 5,
            c_lambda: 0.8,
            a_sigma: 1.0,
            b_sigma: 1.0,
        }
    }
}

impl SmoothingSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.phi > 0.0) {
            return Err(Error::param("phi", "must be positive"));
        }
        if !(self.c_lambda > 0.0 && self.c_lambda < 1.0) {
            return Err(Error::param("clam_smooth", "must lie in (0, 1)"));
        }
        if !(self.a_sigma > 0.0 && self.b_sigma > 0.0) {
            return Err(Error::param("a_sigma/b_sigma", "must be positive"));
        }
        Ok(())
    }
}

/// Mean and variance scale of the GMRF.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GmrfState {
    pub mu: f64,
    pub sigma2: f64,
}

pub fn normal_log_pdf(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * (2.0 * PI * var).ln() - (x - mean).powi(2) / (2.0 * var)
}

/// Inverse-gamma log-density with the given shape and scale; `-inf` off
/// the support.
pub fn inv_gamma_log_pdf(x: f64, shape: f64, scale: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NEG_INFINITY;
    }
    shape * scale.ln() - ln_gamma(shape) - (shape + 1.0) * x.ln() - scale / x
}

pub fn gamma_log_pdf(x: f64, shape: f64, rate: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NEG_INFINITY;
    }
    shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
}

fn ln_factorial(k: usize) -> f64 {
    ln_gamma(k as f64 + 1.0)
}

/// `log P(J = j)` for a Poisson(`phi`) right-truncated at `j_max`.
pub fn truncated_poisson_log_pmf(j: usize, phi: f64, j_max: usize) -> Result<f64> {
    if j > j_max {
        return Err(Error::param("J", format!("{j} exceeds J_max = {j_max}")));
    }
    if !(phi > 0.0) {
        return Err(Error::param("phi", "must be positive"));
    }
    let log_term = |k: usize| k as f64 * phi.ln() - ln_factorial(k);
    let max = (0..=j_max).map(log_term).fold(f64::NEG_INFINITY, f64::max);
    let log_norm = max
        + (0..=j_max)
            .map(|k| (log_term(k) - max).exp())
            .sum::<f64>()
            .ln();
    Ok(log_term(j) - log_norm)
}

/// Log-density of the interior split locations given `J`: the even order
/// statistics of `2J + 1` uniforms on `(0, s_{J+1})`.
pub fn split_location_log_prior(partition: &TimePartition) -> Result<f64> {
    let j = partition.j();
    let end = partition.end();
    let n = (2 * j + 1) as f64;
    let mut value = ln_factorial(2 * j + 1) - n * end.ln();
    for k in 0..partition.intervals() {
        let gap = partition.interval_length(k);
        if !(gap > 0.0) {
            return Err(Error::ZeroDensity("split location prior"));
        }
        value += gap.ln();
    }
    Ok(value)
}

/// Change in the split-location log prior when `s_k` moves to `new`,
/// with `J` fixed.
pub(crate) fn split_move_log_ratio(partition: &TimePartition, k: usize, new: f64) -> f64 {
    let s = partition.splits();
    let (lo, old, hi) = (s[k - 1], s[k], s[k + 1]);
    ((new - lo) * (hi - new)).ln() - ((old - lo) * (hi - old)).ln()
}

/// Products with the AR(1) correlation precision `Q = Sigma_s^{-1}`.
pub mod ar1 {
    /// `Q x`.
    pub fn apply(c: f64, x: &[f64]) -> Vec<f64> {
        let m = x.len();
        if m == 1 {
            return x.to_vec();
        }
        let scale = 1.0 / (1.0 - c * c);
        (0..m)
            .map(|i| {
                let diag = if i == 0 || i == m - 1 {
                    1.0
                } else {
                    1.0 + c * c
                };
                let mut v = diag * x[i];
                if i > 0 {
                    v -= c * x[i - 1];
                }
                if i + 1 < m {
                    v -= c * x[i + 1];
                }
                v * scale
            })
            .collect()
    }

    /// `r' Q r`.
    pub fn quad_form(c: f64, r: &[f64]) -> f64 {
        let mut total = r[0] * r[0];
        let scale = 1.0 / (1.0 - c * c);
        for w in r.windows(2) {
            total += (w[1] - c * w[0]).powi(2) * scale;
        }
        total
    }

    /// `1' Q 1` for dimension `m`.
    pub fn ones_quad(c: f64, m: usize) -> f64 {
        if m == 1 {
            1.0
        } else {
            1.0 + (m - 1) as f64 * (1.0 - c) / (1.0 + c)
        }
    }

    /// `1' Q x`.
    pub fn ones_dot(c: f64, x: &[f64]) -> f64 {
        apply(c, x).iter().sum()
    }

    /// `log det Sigma_s`.
    pub fn log_det_correlation(c: f64, m: usize) -> f64 {
        (m - 1) as f64 * (1.0 - c * c).ln()
    }

    /// Diagonal entry `Q_jj`.
    pub fn diag(c: f64, m: usize, j: usize) -> f64 {
        if m == 1 {
            1.0
        } else if j == 0 || j == m - 1 {
            1.0 / (1.0 - c * c)
        } else {
            (1.0 + c * c) / (1.0 - c * c)
        }
    }

    /// Off-diagonal entry `Q_{j,j+1}`.
    pub fn off_diag(c: f64) -> f64 {
        -c / (1.0 - c * c)
    }
}

/// Log-density of `N_m(mu 1, sigma2 Sigma_s)` at `log_lambda0`.
pub fn gmrf_log_density(log_lambda0: &[f64], state: GmrfState, c_lambda: f64) -> Result<f64> {
    if log_lambda0.is_empty() {
        return Err(Error::param("log_lambda0", "empty vector"));
    }
    if !(state.sigma2 > 0.0) {
        return Err(Error::param("sigma2", "must be positive"));
    }
    Ok(gmrf_log_density_unchecked(log_lambda0, state, c_lambda))
}

pub(crate) fn gmrf_log_density_unchecked(x: &[f64], state: GmrfState, c: f64) -> f64 {
    let m = x.len();
    let r: Vec<f64> = x.iter().map(|v| v - state.mu).collect();
    -0.5 * m as f64 * (2.0 * PI * state.sigma2).ln()
        - 0.5 * ar1::log_det_correlation(c, m)
        - ar1::quad_form(c, &r) / (2.0 * state.sigma2)
}

/// Full conditional mean and variance of component `j` of the GMRF.
pub fn gmrf_conditional(x: &[f64], j: usize, state: GmrfState, c: f64) -> (f64, f64) {
    let m = x.len();
    let qjj = ar1::diag(c, m, j);
    let mut neighbour = 0.0;
    if m > 1 {
        let off = ar1::off_diag(c);
        if j > 0 {
            neighbour += off * (x[j - 1] - state.mu);
        }
        if j + 1 < m {
            neighbour += off * (x[j + 1] - state.mu);
        }
    }
    (state.mu - neighbour / qjj, state.sigma2 / qjj)
}

pub fn sigma2_log_prior(sigma2: f64, a_sigma: f64, b_sigma: f64) -> Result<f64> {
    if !(sigma2 > 0.0) {
        return Err(Error::param("sigma2", "must be positive"));
    }
    Ok(inv_gamma_log_pdf(sigma2, a_sigma, b_sigma))
}

/// Flat prior on `mu`.
pub fn mu_log_prior(_mu: f64) -> f64 {
    0.0
}

/// Flat prior on regression coefficients.
pub fn beta_log_prior(_beta: &[f64]) -> f64 {
    0.0
}

/// `log N(log_lambda; log_lambda0, tau)` with `tau` a variance.
pub fn commensurate_log_density(log_lambda: f64, log_lambda0: f64, tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::param("tau", "must be positive"));
    }
    Ok(normal_log_pdf(log_lambda, log_lambda0, tau))
}
