use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal, Open01};

use crate::borrowing::{lump_weight, BorrowModel};
use crate::data::TrialData;
use crate::error::{Error, Result};
use crate::model::{subject_cumulative_hazards, IntervalStats};
use crate::priors::{ar1, gmrf_conditional, normal_log_pdf};

use super::state::{sample_inv_gamma, ModelState, SamplerContext, Tau};

/// Outcome of one coordinate update of a regression coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BetaMove {
    pub accepted: bool,
    /// The curvature was non-negative at the current point and a random
    /// walk was proposed instead of the Newton step.
    pub fallback: bool,
}

fn log_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample::<f64, _>(Open01).ln()
}

fn accept<R: Rng + ?Sized>(rng: &mut R, log_ratio: f64, what: &str) -> Result<bool> {
    if log_ratio.is_nan() {
        return Err(Error::NonFinite {
            what: format!("{what} acceptance ratio"),
        });
    }
    Ok(log_uniform(rng) < log_ratio)
}

/// Independence Metropolis-Hastings step with a `Gamma(shape, rate)`
/// proposal. `log_target` is the log target density in the natural scale
/// of `x`, up to a constant.
pub fn independence_gamma_step<R, F>(
    rng: &mut R,
    current: f64,
    shape: f64,
    rate: f64,
    log_target: F,
) -> Result<(f64, bool)>
where
    R: Rng + ?Sized,
    F: Fn(f64) -> f64,
{
    let gamma = Gamma::new(shape, 1.0 / rate).map_err(|e| Error::NonFinite {
        what: format!("hazard proposal Gamma({shape}, {rate}): {e}"),
    })?;
    let proposal = gamma.sample(rng).max(f64::MIN_POSITIVE);
    let log_q = |x: f64| (shape - 1.0) * x.ln() - rate * x;
    let log_ratio = log_target(proposal) - log_q(proposal) - (log_target(current) - log_q(current));
    if accept(rng, log_ratio, "hazard")? {
        Ok((proposal, true))
    } else {
        Ok((current, false))
    }
}

fn interval_part(stats: &IntervalStats, j: usize, x: f64) -> f64 {
    let d = stats.events[j];
    let ev = if d > 0.0 { d * x.ln() } else { 0.0 };
    ev - x * stats.exposure[j]
}

/// Updates the historical hazards, interval by interval. Without
/// historical data this is a no-op. Returns the number of accepted moves.
pub fn mh_lambda0<R: Rng + ?Sized>(
    ctx: &SamplerContext<'_>,
    state: &mut ModelState,
    rng: &mut R,
) -> Result<usize> {
    let Some(hist) = ctx.historical else {
        return Ok(0);
    };
    let c = ctx.smoothing.c_lambda;
    let m = state.partition.intervals();
    let mut logs0 = state.anchor().logs();
    let logs = state.lambda.logs();
    if !ctx.use_likelihood {
        for j in 0..m {
            let (cm, cv) = gmrf_conditional(&logs0, j, state.gmrf, c);
            let tau = state.tau.for_interval(j);
            let prec = 1.0 / cv + 1.0 / tau;
            let mean = (cm / cv + logs[j] / tau) / prec;
            logs0[j] = mean + prec.recip().sqrt() * standard_normal(rng);
        }
        write_logs(state.anchor_mut().values_mut(), &logs0);
        return Ok(m);
    }
    let stats = SamplerContext::stats(hist, &state.beta0, &state.partition);
    let (a, b) = (ctx.tuning.a_lambda, ctx.tuning.b_lambda);
    let mut accepted = 0;
    for j in 0..m {
        let (cm, cv) = gmrf_conditional(&logs0, j, state.gmrf, c);
        let tau = state.tau.for_interval(j);
        let target = |x: f64| {
            let l = x.ln();
            interval_part(&stats, j, x)
                + normal_log_pdf(l, cm, cv)
                + normal_log_pdf(logs[j], l, tau)
                - l
        };
        let current = logs0[j].exp();
        let (next, ok) = independence_gamma_step(
            rng,
            current,
            a + stats.events[j],
            b + stats.exposure[j],
            target,
        )?;
        if ok {
            logs0[j] = next.ln();
            state.anchor_mut().values_mut()[j] = next;
            accepted += 1;
        }
    }
    Ok(accepted)
}

/// Updates the current hazards. With borrowing the proposal adds the
/// historical data discounted by `alpha` and the target carries the
/// commensurate prior; without borrowing the target carries the GMRF.
pub fn mh_lambda<R: Rng + ?Sized>(
    ctx: &SamplerContext<'_>,
    state: &mut ModelState,
    rng: &mut R,
) -> Result<usize> {
    let c = ctx.smoothing.c_lambda;
    let m = state.partition.intervals();
    let mut logs = state.lambda.logs();
    let logs0 = state.lambda0.as_ref().map(|l| l.logs());
    if !ctx.use_likelihood {
        for j in 0..m {
            let (mean, var) = match &logs0 {
                Some(l0) => (l0[j], state.tau.for_interval(j)),
                None => gmrf_conditional(&logs, j, state.gmrf, c),
            };
            logs[j] = mean + var.sqrt() * standard_normal(rng);
        }
        write_logs(state.lambda.values_mut(), &logs);
        return Ok(m);
    }
    let stats = SamplerContext::stats(ctx.current, &state.beta, &state.partition);
    let hist_stats = ctx
        .historical
        .map(|h| SamplerContext::stats(h, &state.beta0, &state.partition));
    let alpha = ctx.tuning.alpha;
    let mut accepted = 0;
    for j in 0..m {
        let mut shape = ctx.tuning.a_lambda + stats.events[j];
        let mut rate = ctx.tuning.b_lambda + stats.exposure[j];
        if let Some(h) = &hist_stats {
            shape += alpha * h.events[j];
            rate += alpha * h.exposure[j];
        }
        let (pm, pv) = match &logs0 {
            Some(l0) => (l0[j], state.tau.for_interval(j)),
            None => gmrf_conditional(&logs, j, state.gmrf, c),
        };
        let target = |x: f64| {
            let l = x.ln();
            interval_part(&stats, j, x) + normal_log_pdf(l, pm, pv) - l
        };
        let (next, ok) = independence_gamma_step(rng, logs[j].exp(), shape, rate, target)?;
        if ok {
            logs[j] = next.ln();
            state.lambda.values_mut()[j] = next;
            accepted += 1;
        }
    }
    Ok(accepted)
}

fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(rand_distr::StandardNormal)
}

fn write_logs(values: &mut [f64], logs: &[f64]) {
    for (v, l) in values.iter_mut().zip(logs) {
        *v = l.exp().max(f64::MIN_POSITIVE);
    }
}

/// Conjugate draw of the GMRF mean. Held fixed when sampling the prior,
/// where its flat prior is improper.
pub fn gibbs_mu<R: Rng + ?Sized>(ctx: &SamplerContext<'_>, state: &mut ModelState, rng: &mut R) {
    if !ctx.use_likelihood {
        return;
    }
    let c = ctx.smoothing.c_lambda;
    let x = state.anchor().logs();
    let precision = ar1::ones_quad(c, x.len());
    let mean = ar1::ones_dot(c, &x) / precision;
    let sd = (state.gmrf.sigma2 / precision).sqrt();
    state.gmrf.mu = mean + sd * standard_normal(rng);
}

/// Conjugate inverse-gamma draw of the GMRF variance.
pub fn gibbs_sigma2<R: Rng + ?Sized>(
    ctx: &SamplerContext<'_>,
    state: &mut ModelState,
    rng: &mut R,
) {
    let s = &ctx.smoothing;
    let r: Vec<f64> = state
        .anchor()
        .logs()
        .iter()
        .map(|x| x - state.gmrf.mu)
        .collect();
    let shape = s.a_sigma + r.len() as f64 / 2.0;
    let scale = s.b_sigma + ar1::quad_form(s.c_lambda, &r) / 2.0;
    state.gmrf.sigma2 = sample_inv_gamma(rng, shape, scale);
}

/// Draws the commensurability variances: first the mixture component, then
/// the conjugate inverse-gamma variance. A no-op without borrowing.
pub fn gibbs_tau<R: Rng + ?Sized>(
    ctx: &SamplerContext<'_>,
    state: &mut ModelState,
    rng: &mut R,
) -> Result<()> {
    let Some(l0) = &state.lambda0 else {
        return Ok(());
    };
    let spec = &ctx.borrowing;
    let deltas: Vec<f64> = state
        .lambda
        .as_slice()
        .iter()
        .zip(l0.as_slice())
        .map(|(l, l0)| (l / l0).ln())
        .collect();
    let draw = |sse: f64, m: usize, rng: &mut R| {
        let q = lump_weight(sse, m, spec);
        let lump = q >= 1.0 || rng.random::<f64>() < q;
        let half = m as f64 / 2.0;
        if lump {
            sample_inv_gamma(rng, spec.a_tau + half, spec.b_tau + sse / 2.0)
        } else {
            sample_inv_gamma(rng, spec.c_tau + half, spec.d_tau + sse / 2.0)
        }
    };
    state.tau = match spec.model {
        BorrowModel::All => {
            let sse = deltas.iter().map(|d| d * d).sum();
            Tau::Shared(draw(sse, deltas.len(), rng))
        }
        BorrowModel::Mix | BorrowModel::Uni => {
            Tau::PerInterval(deltas.iter().map(|d| draw(d * d, 1, rng)).collect())
        }
        BorrowModel::None => {
            return Err(Error::param("model_choice", "`none` has no tau"));
        }
    };
    Ok(())
}

/// Log conditional of the coefficients at `beta`, with its gradient and
/// second derivative in coordinate `k`. `cumhaz` holds each subject's
/// baseline cumulative hazard.
pub fn beta_log_conditional(
    data: &TrialData,
    cumhaz: &[f64],
    beta: &[f64],
    k: usize,
    end: f64,
) -> (f64, f64, f64) {
    let eta = data.design().linear_predictor(beta);
    let (mut value, mut grad, mut hess) = (0.0, 0.0, 0.0);
    for (i, ((&e, &y), &h)) in data.event().iter().zip(data.tte()).zip(cumhaz).enumerate() {
        let x = data.design().get(i, k);
        let risk = eta[i].exp() * h;
        let nu = if e && y <= end { 1.0 } else { 0.0 };
        value += nu * eta[i] - risk;
        grad += x * (nu - risk);
        hess -= x * x * risk;
    }
    (value, grad, hess)
}

/// Mean and variance of the proposal for one coefficient, and whether the
/// random-walk fallback was used.
pub fn newton_proposal(beta_k: f64, grad: f64, hess: f64, cprop: f64) -> (f64, f64, bool) {
    if hess < 0.0 && hess.is_finite() && grad.is_finite() {
        (beta_k - grad / hess, cprop * cprop / -hess, false)
    } else {
        (beta_k, cprop * cprop, true)
    }
}

fn coordinate_updates<R: Rng + ?Sized>(
    data: &TrialData,
    cumhaz: &[f64],
    beta: &mut [f64],
    cprop: f64,
    end: f64,
    rng: &mut R,
) -> Result<Vec<BetaMove>> {
    let mut moves = Vec::with_capacity(beta.len());
    for k in 0..beta.len() {
        let (value, grad, hess) = beta_log_conditional(data, cumhaz, beta, k, end);
        let (mean, var, fallback) = newton_proposal(beta[k], grad, hess, cprop);
        let old = beta[k];
        let proposal = Normal::new(mean, var.sqrt())
            .map_err(|e| Error::NonFinite {
                what: format!("beta proposal: {e}"),
            })?
            .sample(rng);
        beta[k] = proposal;
        let (value_new, grad_new, hess_new) = beta_log_conditional(data, cumhaz, beta, k, end);
        let (mean_back, var_back, _) = newton_proposal(proposal, grad_new, hess_new, cprop);
        let log_ratio = value_new - value + normal_log_pdf(old, mean_back, var_back)
            - normal_log_pdf(proposal, mean, var);
        let accepted = accept(rng, log_ratio, "beta")?;
        if !accepted {
            beta[k] = old;
        }
        moves.push(BetaMove { accepted, fallback });
    }
    Ok(moves)
}

/// Coordinate-wise Newton-proposal updates of the current coefficients.
/// Skipped when sampling the prior, where the flat prior is improper.
pub fn mh_beta<R: Rng + ?Sized>(
    ctx: &SamplerContext<'_>,
    state: &mut ModelState,
    rng: &mut R,
) -> Result<Vec<BetaMove>> {
    if !ctx.use_likelihood || state.beta.is_empty() {
        return Ok(Vec::new());
    }
    let cumhaz =
        subject_cumulative_hazards(ctx.current.tte(), &state.partition, state.lambda.as_slice());
    coordinate_updates(
        ctx.current,
        &cumhaz,
        &mut state.beta,
        ctx.tuning.cprop_beta,
        ctx.end,
        rng,
    )
}

/// Same for the historical coefficients.
pub fn mh_beta0<R: Rng + ?Sized>(
    ctx: &SamplerContext<'_>,
    state: &mut ModelState,
    rng: &mut R,
) -> Result<Vec<BetaMove>> {
    let (Some(hist), Some(l0)) = (ctx.historical, &state.lambda0) else {
        return Ok(Vec::new());
    };
    if !ctx.use_likelihood || state.beta0.is_empty() {
        return Ok(Vec::new());
    }
    let cumhaz = subject_cumulative_hazards(hist.tte(), &state.partition, l0.as_slice());
    coordinate_updates(
        hist,
        &cumhaz,
        &mut state.beta0,
        ctx.tuning.cprop_beta0,
        ctx.end,
        rng,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::priors::gamma_log_pdf;
    use crate::sampler::chain_rng;

    #[test]
    fn independence_step_accepts_everything_when_target_equals_proposal() {
        let mut rng = chain_rng(7, 0);
        let (shape, rate) = (3.5, 20.0);
        let mut x = 0.1;
        for _ in 0..500 {
            let (next, ok) = independence_gamma_step(&mut rng, x, shape, rate, |v| {
                gamma_log_pdf(v, shape, rate)
            })
            .unwrap();
            assert!(ok);
            x = next;
        }
    }

    #[test]
    fn newton_step_on_a_quadratic_lands_on_the_mode() {
        // log f = -(b - 2)^2 / 2 at b = 0: gradient 2, curvature -1.
        let (mean, var, fallback) = newton_proposal(0.0, 2.0, -1.0, 0.5);
        assert_eq!((mean, var, fallback), (2.0, 0.25, false));
    }

    #[test]
    fn flat_curvature_falls_back_to_a_random_walk() {
        let (mean, var, fallback) = newton_proposal(1.5, 0.0, 0.0, 0.5);
        assert_eq!((mean, var, fallback), (1.5, 0.25, true));
    }

    #[test]
    fn conditional_derivatives_match_finite_differences() {
        let tte = vec![0.5, 1.2, 2.0, 0.3, 1.7];
        let event = vec![true, false, true, true, false];
        let design = crate::data::Design::from_rows(&[
            vec![1.0],
            vec![0.0],
            vec![1.0],
            vec![0.0],
            vec![1.0],
        ])
        .unwrap();
        let data = TrialData::new(tte, event, design, vec!["X1".into()], Some(0)).unwrap();
        let cumhaz = vec![0.4, 1.1, 1.8, 0.2, 1.5];
        let h = 1e-5;
        let (_, g, hh) = beta_log_conditional(&data, &cumhaz, &[0.3], 0, 2.0);
        let f = |b: f64| beta_log_conditional(&data, &cumhaz, &[b], 0, 2.0).0;
        let fd_g = (f(0.3 + h) - f(0.3 - h)) / (2.0 * h);
        let fd_h = (f(0.3 + h) - 2.0 * f(0.3) + f(0.3 - h)) / (h * h);
        assert!((g - fd_g).abs() < 1e-7);
        assert!((hh - fd_h).abs() < 1e-4);
    }
}
