//! Lump-and-smear commensurate priors and their calibration.
//!
//! The commensurability variance `tau` has the mixture prior
//! `p_0 IG(a_tau, b_tau) + (1 - p_0) IG(c_tau, d_tau)`: a tight lump that
//! encourages borrowing and a diffuse smear that allows discounting. Given a
//! difference `delta` between current and historical log hazards, the
//! posterior probability of the lump is available in closed form because
//! `N(delta; 0, tau)` integrated against `IG(a, b)` is a scaled Student t:
//!
//! ```text
//! m(delta) = b^a Gamma(a + 1/2) / (Gamma(a) sqrt(2 pi)) (b + delta^2 / 2)^-(a + 1/2)
//! ```
//!
//! With `a_tau = c_tau = 1` the weight reduces to
//! `q0 = [1 + (1 - p0)/p0 (d/b) ((delta^2 + 2b)/(delta^2 + 2d))^(3/2)]^-1`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::priors::inv_gamma_log_pdf;

/// Parameterisation of the commensurability prior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BorrowModel {
    /// One mixture-distributed `tau_j` per interval.
    Mix,
    /// One mixture-distributed `tau` shared by all intervals.
    All,
    /// One inverse-gamma `tau_j` per interval.
    Uni,
    /// No borrowing.
    None,
}

impl BorrowModel {
    pub fn as_str(&self) -> &'static str {
        match self {
            BorrowModel::Mix => "mix",
            BorrowModel::All => "all",
            BorrowModel::Uni => "uni",
            BorrowModel::None => "none",
        }
    }
}

impl std::str::FromStr for BorrowModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mix" => Ok(BorrowModel::Mix),
            "all" => Ok(BorrowModel::All),
            "uni" => Ok(BorrowModel::Uni),
            "none" => Ok(BorrowModel::None),
            other => Err(Error::param(
                "model_choice",
                format!("`{other}` is not one of mix, all, uni, none"),
            )),
        }
    }
}

impl std::fmt::Display for BorrowModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BorrowingSpec {
    pub model: BorrowModel,
    pub a_tau: f64,
    pub b_tau: f64,
    pub c_tau: f64,
    pub d_tau: f64,
    pub p_0: f64,
}

impl Default for BorrowingSpec {
    fn default() -> Self {
        Self {
            model: BorrowModel::Mix,
            a_tau: 1.0,
            b_tau: 0.001,
            c_tau: 1.0,
            d_tau: 1.0,
            p_0: 0.8,
        }
    }
}

impl BorrowingSpec {
    pub fn with_model(self, model: BorrowModel) -> Self {
        Self { model, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.model == BorrowModel::None {
            return Ok(());
        }
        if !(self.a_tau > 0.0 && self.b_tau > 0.0) {
            return Err(Error::param("a_tau/b_tau", "must be positive"));
        }
        if matches!(self.model, BorrowModel::Mix | BorrowModel::All) {
            if !(self.c_tau > 0.0 && self.d_tau > 0.0) {
                return Err(Error::param("c_tau/d_tau", "must be positive"));
            }
            if !(self.b_tau < self.d_tau) {
                return Err(Error::param("b_tau", "the lump scale must be below d_tau"));
            }
            if !(self.p_0 > 0.0 && self.p_0 <= 1.0) {
                return Err(Error::param("p_0", "must lie in (0, 1]"));
            }
        }
        Ok(())
    }

    /// Whether the mixture has both components.
    pub fn is_mixture(&self) -> bool {
        matches!(self.model, BorrowModel::Mix | BorrowModel::All) && self.p_0 < 1.0
    }

    /// Log prior density of `tau`.
    pub fn tau_log_prior(&self, tau: f64) -> f64 {
        let lump = inv_gamma_log_pdf(tau, self.a_tau, self.b_tau);
        match self.model {
            BorrowModel::Uni => lump,
            BorrowModel::None => 0.0,
            BorrowModel::Mix | BorrowModel::All => {
                if self.p_0 >= 1.0 {
                    return lump;
                }
                let smear = inv_gamma_log_pdf(tau, self.c_tau, self.d_tau);
                log_sum_exp(self.p_0.ln() + lump, (1.0 - self.p_0).ln() + smear)
            }
        }
    }
}

pub(crate) fn log_sum_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Log marginal density of `m` differences with squared sum `sse` under
/// `N(0, tau)` with `tau ~ IG(shape, scale)`.
pub fn log_marginal(sse: f64, m: usize, shape: f64, scale: f64) -> f64 {
    let half = m as f64 / 2.0;
    shape * scale.ln() - ln_gamma(shape) + ln_gamma(shape + half)
        - half * (2.0 * PI).ln()
        - (shape + half) * (scale + sse / 2.0).ln()
}

/// Posterior probability of the lump given `m` differences with squared
/// sum `sse`.
pub fn lump_weight(sse: f64, m: usize, spec: &BorrowingSpec) -> f64 {
    if spec.p_0 >= 1.0 || spec.model == BorrowModel::Uni {
        return 1.0;
    }
    let lump = log_marginal(sse, m, spec.a_tau, spec.b_tau);
    let smear = log_marginal(sse, m, spec.c_tau, spec.d_tau);
    let log_odds = ((1.0 - spec.p_0) / spec.p_0).ln() + smear - lump;
    1.0 / (1.0 + log_odds.exp())
}

/// Posterior lump weight `q0` for one log-hazard difference.
pub fn posterior_weight_q0(delta: f64, spec: &BorrowingSpec) -> Result<f64> {
    if !matches!(spec.model, BorrowModel::Mix | BorrowModel::All) {
        return Err(Error::param(
            "model_choice",
            format!("no posterior weight exists for `{}`", spec.model),
        ));
    }
    spec.validate()?;
    if spec.p_0 >= 1.0 {
        return Ok(1.0);
    }
    let d2 = delta * delta;
    if spec.a_tau == 1.0 && spec.c_tau == 1.0 {
        let (b, d, p) = (spec.b_tau, spec.d_tau, spec.p_0);
        let ratio = ((d2 + 2.0 * b) / (d2 + 2.0 * d)).powf(1.5);
        Ok(1.0 / (1.0 + (1.0 - p) / p * (d / b) * ratio))
    } else {
        Ok(lump_weight(d2, 1, spec))
    }
}

/// Prior weight `p_0` whose posterior lump weight equals 0.5 at `|delta| = xi`
/// (with `a_tau = c_tau = 1`).
pub fn prior_weight_from_xi(xi: f64, b_tau: f64, d_tau: f64) -> Result<f64> {
    if !(xi > 0.0) {
        return Err(Error::param("xi", "must be positive"));
    }
    check_scales(b_tau, d_tau)?;
    let x2 = xi * xi;
    let ratio = ((x2 + 2.0 * d_tau) / (x2 + 2.0 * b_tau)).powf(1.5);
    Ok(1.0 / (1.0 + b_tau / d_tau * ratio))
}

/// Tolerable difference `xi` at which the posterior lump weight crosses 0.5
/// for prior weight `p_0` (with `a_tau = c_tau = 1`).
pub fn xi_from_prior_weight(p_0: f64, b_tau: f64, d_tau: f64) -> Result<f64> {
    if !(p_0 > 0.0 && p_0 < 1.0) {
        return Err(Error::param("p_0", "must lie in (0, 1)"));
    }
    check_scales(b_tau, d_tau)?;
    // q0 = 1/2  <=>  (xi^2 + 2b) / (xi^2 + 2d) = (b p0 / (d (1 - p0)))^(2/3)
    let r = (b_tau * p_0 / (d_tau * (1.0 - p_0))).powf(2.0 / 3.0);
    if r >= 1.0 {
        return Err(Error::NoCrossing { p_0 });
    }
    let x2 = 2.0 * (d_tau * r - b_tau) / (1.0 - r);
    if !(x2 > 0.0) {
        return Err(Error::NoCrossing { p_0 });
    }
    Ok(x2.sqrt())
}

fn check_scales(b_tau: f64, d_tau: f64) -> Result<()> {
    if !(b_tau > 0.0 && d_tau > 0.0) {
        return Err(Error::param("b_tau/d_tau", "must be positive"));
    }
    if b_tau == d_tau {
        return Err(Error::param(
            "b_tau/d_tau",
            "identical components never cross",
        ));
    }
    if b_tau > d_tau {
        return Err(Error::param("b_tau", "the lump scale must be below d_tau"));
    }
    Ok(())
}

/// Posterior lump weight over a grid of squared log-hazard differences.
#[derive(Debug, Clone, Serialize)]
pub struct BorrowingProfile {
    pub p_0: f64,
    pub sse: Vec<f64>,
    pub q0: Vec<f64>,
    /// Difference at which `q0` crosses 0.5, when it does.
    pub xi: Option<f64>,
}

impl BorrowingProfile {
    pub fn xi_squared(&self) -> Option<f64> {
        self.xi.map(|x| x * x)
    }
}

/// Evaluates the borrowing profile on a grid of SSE values. For `mix` the
/// grid entries are squared single-interval differences; for `all` they are
/// sums of squared differences over `intervals` intervals.
pub fn borrowing_profile(
    spec: &BorrowingSpec,
    sse_grid: &[f64],
    intervals: usize,
) -> Result<BorrowingProfile> {
    spec.validate()?;
    let m = match spec.model {
        BorrowModel::Mix => 1,
        BorrowModel::All => intervals.max(1),
        other => {
            return Err(Error::param(
                "model_choice",
                format!("no borrowing profile exists for `{other}`"),
            ))
        }
    };
    if sse_grid.iter().any(|&s| !(s >= 0.0)) {
        return Err(Error::param("sse_grid", "values must be nonnegative"));
    }
    let q0 = sse_grid.iter().map(|&s| lump_weight(s, m, spec)).collect();
    Ok(BorrowingProfile {
        p_0: spec.p_0,
        sse: sse_grid.to_vec(),
        q0,
        xi: crossing(spec, m),
    })
}

/// Difference at which the lump weight crosses 0.5.
fn crossing(spec: &BorrowingSpec, m: usize) -> Option<f64> {
    if spec.p_0 >= 1.0 {
        return None;
    }
    if m == 1 && spec.a_tau == 1.0 && spec.c_tau == 1.0 {
        return xi_from_prior_weight(spec.p_0, spec.b_tau, spec.d_tau).ok();
    }
    let f = |sse: f64| lump_weight(sse, m, spec) - 0.5;
    if f(0.0) <= 0.0 {
        return None;
    }
    let mut hi = 1.0;
    while f(hi) > 0.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return None;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some((0.5 * (lo + hi)).sqrt())
}

/// Approximate number of historical subjects contributed by the prior.
pub fn effective_sample_size(n0: usize, p_0: f64) -> f64 {
    n0 as f64 * p_0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(b: f64, d: f64, p: f64) -> BorrowingSpec {
        BorrowingSpec {
            b_tau: b,
            d_tau: d,
            p_0: p,
            ..BorrowingSpec::default()
        }
    }

    #[test]
    fn threshold_pair_at_unit_smear() {
        // p0 = 0.8 with b = 0.001, d = 1 crosses 0.5 at xi = 0.2228; at the
        // rounded 0.222 the closed form gives 0.50258.
        let q = posterior_weight_q0(0.222, &spec(0.001, 1.0, 0.8)).unwrap();
        assert!((q - 0.502_584_846_309_627_5).abs() < 1e-12);
        let p0 = prior_weight_from_xi(0.222, 0.001, 1.0).unwrap();
        assert!((p0 - 0.80).abs() < 0.005);
        let xi = xi_from_prior_weight(0.8, 0.001, 1.0).unwrap();
        assert!((xi - 0.222).abs() < 0.001);
    }

    #[test]
    fn threshold_pair_at_wide_smear() {
        let p0 = prior_weight_from_xi(0.3175, 0.001, 25.0).unwrap();
        assert!((p0 - 0.70).abs() < 0.01);
        let xi = xi_from_prior_weight(0.7, 0.001, 25.0).unwrap();
        assert!((xi - 0.3).abs() < 0.02);
    }

    #[test]
    fn identical_components_return_prior_weight() {
        let s = BorrowingSpec {
            b_tau: 0.5,
            d_tau: 0.5 + 1e-15,
            ..BorrowingSpec::default()
        };
        let q = posterior_weight_q0(0.0, &s).unwrap();
        assert!((q - 0.8).abs() < 1e-12);
        let same = BorrowingSpec { d_tau: 0.5, ..s };
        assert!((lump_weight(0.0, 1, &same) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn fixed_point_and_round_trip() {
        for &xi in &[0.05, 0.1, 0.222, 0.5, 1.3] {
            for &(b, d) in &[(0.001, 1.0), (0.001, 25.0), (0.01, 2.0)] {
                let p0 = prior_weight_from_xi(xi, b, d).unwrap();
                let q = posterior_weight_q0(xi, &spec(b, d, p0)).unwrap();
                assert!((q - 0.5).abs() < 1e-10);
                let back = xi_from_prior_weight(p0, b, d).unwrap();
                assert!((back - xi).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn no_crossing_reported() {
        assert!(matches!(
            xi_from_prior_weight(0.01, 0.001, 1.0),
            Err(Error::NoCrossing { .. })
        ));
        assert!(matches!(
            xi_from_prior_weight(0.9999, 0.001, 1.0),
            Err(Error::NoCrossing { .. })
        ));
        assert!(prior_weight_from_xi(0.2, 1.0, 1.0).is_err());
    }

    #[test]
    fn zero_difference_limit() {
        for &p in &[0.5, 0.8, 0.9] {
            let s = spec(0.001, 1.0, p);
            let expect = 1.0 / (1.0 + (1.0 - p) / p * (0.001f64 / 1.0).sqrt());
            let q = posterior_weight_q0(0.0, &s).unwrap();
            assert!((q - expect).abs() < 1e-12);
            assert!(q > p);
        }
        let q = posterior_weight_q0(0.0, &spec(1e-8, 1.0, 0.8)).unwrap();
        assert!(q > 0.99);
    }

    #[test]
    fn strictly_decreasing() {
        let s = spec(0.001, 1.0, 0.8);
        let qs: Vec<f64> = (0..2000)
            .map(|i| posterior_weight_q0(i as f64 * 1e-3, &s).unwrap())
            .collect();
        assert!(qs.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn profile_family_ordering() {
        let grid: Vec<f64> = (0..=250).map(|i| i as f64 * 1e-3).collect();
        let profiles: Vec<BorrowingProfile> = [0.5, 0.8, 0.9]
            .iter()
            .map(|&p| borrowing_profile(&spec(0.001, 1.0, p), &grid, 1).unwrap())
            .collect();
        for prof in &profiles {
            assert!(prof.q0.windows(2).all(|w| w[1] < w[0]));
        }
        for i in 0..grid.len() {
            assert!(profiles[2].q0[i] > profiles[1].q0[i]);
            assert!(profiles[1].q0[i] > profiles[0].q0[i]);
        }
        assert!((profiles[1].xi.unwrap() - 0.222).abs() < 0.001);
    }

    #[test]
    fn all_model_with_one_interval_matches_mix() {
        let grid = [0.0, 0.01, 0.05, 0.2];
        let mix = borrowing_profile(&spec(0.001, 1.0, 0.8), &grid, 1).unwrap();
        let all = borrowing_profile(
            &spec(0.001, 1.0, 0.8).with_model(BorrowModel::All),
            &grid,
            1,
        )
        .unwrap();
        for (a, b) in mix.q0.iter().zip(&all.q0) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((mix.xi.unwrap() - all.xi.unwrap()).abs() < 1e-9);
    }

    #[test]
    fn lump_only_profile_is_constant() {
        let grid = [0.0, 0.1, 1.0];
        let prof = borrowing_profile(&spec(0.001, 1.0, 1.0), &grid, 1).unwrap();
        assert!(prof.q0.iter().all(|&q| q == 1.0));
        assert_eq!(prof.xi, None);
    }

    #[test]
    fn uni_has_no_profile() {
        let s = BorrowingSpec::default().with_model(BorrowModel::Uni);
        assert!(borrowing_profile(&s, &[0.0], 1).is_err());
        assert!(posterior_weight_q0(0.0, &s).is_err());
    }

    #[test]
    fn ess() {
        assert_eq!(effective_sample_size(100, 0.8), 80.0);
        assert_eq!(effective_sample_size(100, 1.0), 100.0);
        assert_eq!(effective_sample_size(100, 0.0), 0.0);
    }

    #[test]
    fn general_shape_closed_form_matches_unit_shape() {
        let s = spec(0.001, 1.0, 0.8);
        for &delta in &[0.0, 0.1, 0.3, 1.0] {
            let a = posterior_weight_q0(delta, &s).unwrap();
            let b = lump_weight(delta * delta, 1, &s);
            assert!((a - b).abs() < 1e-12);
        }
    }
}
