//! Dimension-changing moves on the partition and the within-dimension
//! relocation of a single split point.
//!
//! Heights are split in log space: with `w_L` the fraction of the old
//! interval left of the new point and `r = log((1 - u) / u)`,
//! `log λ_L = log λ + w_R r` and `log λ_R = log λ - w_L r`, so the
//! length-weighted log mean is preserved and `λ_L / λ_R = (1 - u) / u`.
//! The Jacobian of `(log λ, u) -> (log λ_L, log λ_R)` is `1 / (u (1 - u))`.

use rand::Rng;
use rand_distr::Open01;

use crate::error::{Error, Result};
use crate::priors::split_move_log_ratio;

use super::state::{dataset_log_likelihood, sample_tau_prior, ModelState, SamplerContext, Tau};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpKind {
    Birth,
    Death,
    /// `J_max = 0`: no jump is possible.
    Stay,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpOutcome {
    pub kind: JumpKind,
    pub accepted: bool,
    pub log_ratio: f64,
}

/// Birth and death probabilities at `j` interior split points.
pub fn birth_death_probabilities(j: usize, j_max: usize, pi_b: f64) -> (f64, f64) {
    if j_max == 0 {
        (0.0, 0.0)
    } else if j == 0 {
        (1.0, 0.0)
    } else if j >= j_max {
        (0.0, 1.0)
    } else {
        (pi_b, 1.0 - pi_b)
    }
}

/// Splits `lambda` into left and right heights; `w_left` is the left
/// share of the interval length and `u` lies in `(0, 1)`.
pub fn split_heights(lambda: f64, w_left: f64, u: f64) -> (f64, f64) {
    let (l, r) = split_logs(lambda.ln(), w_left, u);
    (l.exp(), r.exp())
}

/// Inverse of [`split_heights`]: the merged height and the `u` that
/// produces `(left, right)`.
pub fn merge_heights(left: f64, right: f64, w_left: f64) -> (f64, f64) {
    let (l, u) = merge_logs(left.ln(), right.ln(), w_left);
    (l.exp(), u)
}

fn split_logs(log_lambda: f64, w_left: f64, u: f64) -> (f64, f64) {
    let r = ((1.0 - u) / u).ln();
    (log_lambda + (1.0 - w_left) * r, log_lambda - w_left * r)
}

fn merge_logs(log_left: f64, log_right: f64, w_left: f64) -> (f64, f64) {
    let merged = w_left * log_left + (1.0 - w_left) * log_right;
    let u = 1.0 / (1.0 + (log_left - log_right).exp());
    (merged, u)
}

fn log_jacobian(u: f64) -> f64 {
    -(u * (1.0 - u)).ln()
}

fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(Open01)
}

fn split_vector(values: &mut Vec<f64>, at: usize, w_left: f64, u: f64) {
    let (l, r) = split_logs(values[at].ln(), w_left, u);
    values[at] = l.exp().max(f64::MIN_POSITIVE);
    values.insert(at + 1, r.exp().max(f64::MIN_POSITIVE));
}

/// Returns `u` for the merge of intervals `at` and `at + 1`.
fn merge_vector(values: &mut Vec<f64>, at: usize, w_left: f64) -> f64 {
    let right = values.remove(at + 1);
    let (merged, u) = merge_logs(values[at].ln(), right.ln(), w_left);
    values[at] = merged.exp();
    u
}

/// One birth or death proposal on the number of split points.
pub fn rjmcmc_step<R: Rng + ?Sized>(
    ctx: &SamplerContext<'_>,
    state: &mut ModelState,
    rng: &mut R,
) -> Result<JumpOutcome> {
    let j = state.j();
    let j_max = ctx.smoothing.j_max;
    let pi_b = ctx.tuning.pi_b;
    let (pb, pd) = birth_death_probabilities(j, j_max, pi_b);
    if pb == 0.0 && pd == 0.0 {
        return Ok(JumpOutcome {
            kind: JumpKind::Stay,
            accepted: false,
            log_ratio: f64::NEG_INFINITY,
        });
    }
    let end = ctx.end;
    let birth = rng.random::<f64>() < pb;
    let mut proposal = state.clone();
    let log_ratio;
    let kind;
    if birth {
        kind = JumpKind::Birth;
        let at = open01(rng) * end;
        let interval = state.partition.interval_of(at);
        let (lo, hi) = state.partition.interval_bounds(interval);
        if !(at > lo && at < hi) {
            return Ok(JumpOutcome {
                kind,
                accepted: false,
                log_ratio: f64::NEG_INFINITY,
            });
        }
        let w_left = (at - lo) / (hi - lo);
        let u = open01(rng);
        let mut log_jac = log_jacobian(u);
        split_vector(proposal.lambda.values_mut(), interval, w_left, u);
        if let Some(l0) = proposal.lambda0.as_mut() {
            let u0 = open01(rng);
            log_jac += log_jacobian(u0);
            split_vector(l0.values_mut(), interval, w_left, u0);
        }
        let mut log_q_tau = 0.0;
        if let Tau::PerInterval(t) = &mut proposal.tau {
            let fresh = sample_tau_prior(rng, &ctx.borrowing);
            log_q_tau = ctx.borrowing.tau_log_prior(fresh);
            t.insert(interval + 1, fresh);
        }
        proposal.partition.insert(interval, at);
        let (_, pd_next) = birth_death_probabilities(j + 1, j_max, pi_b);
        log_ratio = ctx.log_posterior(&proposal) - ctx.log_posterior(state)
            + (pd_next / (j + 1) as f64).ln()
            - (pb / end).ln()
            - log_q_tau
            + log_jac;
    } else {
        kind = JumpKind::Death;
        let k = rng.random_range(1..=j);
        let left = k - 1;
        let len_left = state.partition.interval_length(left);
        let w_left = len_left / (len_left + state.partition.interval_length(k));
        let u = merge_vector(proposal.lambda.values_mut(), left, w_left);
        let mut log_jac = log_jacobian(u);
        if let Some(l0) = proposal.lambda0.as_mut() {
            let u0 = merge_vector(l0.values_mut(), left, w_left);
            log_jac += log_jacobian(u0);
        }
        let mut log_q_tau = 0.0;
        if let Tau::PerInterval(t) = &mut proposal.tau {
            let removed = t.remove(k);
            log_q_tau = ctx.borrowing.tau_log_prior(removed);
        }
        proposal.partition.remove(k);
        let (pb_next, _) = birth_death_probabilities(j - 1, j_max, pi_b);
        log_ratio = ctx.log_posterior(&proposal) - ctx.log_posterior(state) + (pb_next / end).ln()
            - (pd / j as f64).ln()
            + log_q_tau
            - log_jac;
    }
    if log_ratio.is_nan() {
        return Err(Error::NonFinite {
            what: "reversible-jump acceptance ratio".into(),
        });
    }
    let accepted = open01(rng).ln() < log_ratio;
    if accepted {
        *state = proposal;
    }
    Ok(JumpOutcome {
        kind,
        accepted,
        log_ratio,
    })
}

/// Relocates one interior split point uniformly between its neighbours,
/// keeping every hazard. Returns whether the move was accepted.
pub fn move_split_location<R: Rng + ?Sized>(
    ctx: &SamplerContext<'_>,
    state: &mut ModelState,
    rng: &mut R,
) -> Result<bool> {
    let j = state.j();
    if j == 0 {
        return Ok(false);
    }
    let k = rng.random_range(1..=j);
    let s = state.partition.splits();
    let (lo, hi) = (s[k - 1], s[k + 1]);
    let at = lo + open01(rng) * (hi - lo);
    if !(at > lo && at < hi) {
        return Ok(false);
    }
    let mut partition = state.partition.clone();
    partition.set(k, at);
    let mut log_ratio = split_move_log_ratio(&state.partition, k, at);
    if ctx.use_likelihood {
        let mut delta = dataset_log_likelihood(
            ctx.current,
            &state.beta,
            &partition,
            state.lambda.as_slice(),
        ) - dataset_log_likelihood(
            ctx.current,
            &state.beta,
            &state.partition,
            state.lambda.as_slice(),
        );
        if let (Some(hist), Some(l0)) = (ctx.historical, &state.lambda0) {
            delta += dataset_log_likelihood(hist, &state.beta0, &partition, l0.as_slice())
                - dataset_log_likelihood(hist, &state.beta0, &state.partition, l0.as_slice());
        }
        log_ratio += delta;
    }
    if log_ratio.is_nan() {
        return Err(Error::NonFinite {
            what: "split relocation acceptance ratio".into(),
        });
    }
    let accepted = open01(rng).ln() < log_ratio;
    if accepted {
        state.partition = partition;
    }
    Ok(accepted)
}
