use serde::{Deserialize, Serialize};

use crate::borrowing::BorrowModel;
use crate::data::TrialData;
use crate::error::{Error, Result};

use super::kernels::{
    gibbs_mu, gibbs_sigma2, gibbs_tau, mh_beta, mh_beta0, mh_lambda, mh_lambda0, BetaMove,
};
use super::rjmcmc::{move_split_location, rjmcmc_step, JumpKind};
use super::state::{init_state, ModelState, SamplerContext};
use super::{chain_rng, ChainConfig, TuningParams};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveCounter {
    pub proposed: u64,
    pub accepted: u64,
}

impl MoveCounter {
    pub fn record(&mut self, accepted: bool) {
        self.proposed += 1;
        self.accepted += u64::from(accepted);
    }

    pub fn rate(&self) -> f64 {
        if self.proposed == 0 {
            f64::NAN
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

/// Acceptance counts over every sweep, warmup included.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Acceptance {
    pub beta: Vec<MoveCounter>,
    pub beta0: Vec<MoveCounter>,
    pub beta_fallbacks: u64,
    pub lambda: MoveCounter,
    pub lambda0: MoveCounter,
    pub birth: MoveCounter,
    pub death: MoveCounter,
    pub move_split: MoveCounter,
}

impl Acceptance {
    fn record_beta(counters: &mut [MoveCounter], fallbacks: &mut u64, moves: &[BetaMove]) {
        for (c, m) in counters.iter_mut().zip(moves) {
            c.record(m.accepted);
            *fallbacks += u64::from(m.fallback);
        }
    }
}

/// One stored iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Draw {
    pub j: usize,
    pub mu: f64,
    pub sigma2: f64,
    pub beta: Vec<f64>,
    pub beta0: Vec<f64>,
    /// All split points, `0` and the endpoint included.
    pub splits: Vec<f64>,
    pub lambda: Vec<f64>,
    pub lambda0: Option<Vec<f64>>,
    /// Per-interval values, or a single shared value under `all`.
    pub tau: Vec<f64>,
}

impl Draw {
    fn from_state(state: &ModelState) -> Self {
        Self {
            j: state.j(),
            mu: state.gmrf.mu,
            sigma2: state.gmrf.sigma2,
            beta: state.beta.clone(),
            beta0: state.beta0.clone(),
            splits: state.partition.splits().to_vec(),
            lambda: state.lambda.as_slice().to_vec(),
            lambda0: state.lambda0.as_ref().map(|l| l.as_slice().to_vec()),
            tau: state.tau.values(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainOutput {
    pub draws: Vec<Draw>,
    /// Evenly spaced evaluation points on `[0, end]`.
    pub time_grid: Vec<f64>,
    pub end: f64,
    pub acceptance: Acceptance,
    pub beta_names: Vec<String>,
    pub beta0_names: Vec<String>,
    pub borrow: bool,
    pub model: BorrowModel,
    pub seed: u64,
    pub chain: u64,
}

/// `Iteration: <k> / <total> (Warmup|Sampling)`.
pub fn progress_line(k: usize, total: usize, warmup: usize) -> String {
    let phase = if k <= warmup { "Warmup" } else { "Sampling" };
    format!("Iteration: {k} / {total} ({phase})")
}

/// `beta_<k> acceptance ratio: <r>` with 7 significant digits.
pub fn acceptance_line(name: &str, rate: f64) -> String {
    format!("{name} acceptance ratio: {}", significant(rate, 7))
}

fn significant(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (digits as i32 - 1 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn linspace(end: f64, n: usize) -> Vec<f64> {
    let step = end / (n - 1) as f64;
    (0..n)
        .map(|i| if i + 1 == n { end } else { step * i as f64 })
        .collect()
}

/// Runs chain 0 for `config`. With `config.verbose` progress and
/// acceptance lines go to standard error.
pub fn run_chain(
    current: &TrialData,
    historical: Option<&TrialData>,
    config: &ChainConfig,
    tuning: &TuningParams,
) -> Result<ChainOutput> {
    let mut sink = |line: &str| {
        if config.verbose {
            eprintln!("{line}");
        }
    };
    run_chain_observed(current, historical, config, tuning, 0, &mut sink)
}

/// Runs one chain on stream `chain` of `config.seed`, passing every
/// console line to `observer`.
pub fn run_chain_observed(
    current: &TrialData,
    historical: Option<&TrialData>,
    config: &ChainConfig,
    tuning: &TuningParams,
    chain: u64,
    observer: &mut dyn FnMut(&str),
) -> Result<ChainOutput> {
    let ctx = SamplerContext::new(current, historical, config, tuning)?;
    let mut rng = chain_rng(config.seed, chain);
    let mut state = init_state(&ctx, &mut rng)?;
    let total = config.total_iterations();
    let mut acceptance = Acceptance {
        beta: vec![MoveCounter::default(); state.beta.len()],
        beta0: vec![MoveCounter::default(); state.beta0.len()],
        ..Acceptance::default()
    };
    let mut draws = Vec::with_capacity(config.iter);
    observer("Starting MCMC sampler");
    for it in 1..=total {
        let at = |e: Error| Error::Sampler {
            iteration: it,
            what: e.to_string(),
        };
        let jump = rjmcmc_step(&ctx, &mut state, &mut rng).map_err(at)?;
        match jump.kind {
            JumpKind::Birth => acceptance.birth.record(jump.accepted),
            JumpKind::Death => acceptance.death.record(jump.accepted),
            JumpKind::Stay => {}
        }
        if state.j() > 0 {
            let moved = move_split_location(&ctx, &mut state, &mut rng).map_err(at)?;
            acceptance.move_split.record(moved);
        }
        let m = state.partition.intervals() as u64;
        if ctx.borrow() {
            let accepted = mh_lambda0(&ctx, &mut state, &mut rng).map_err(at)?;
            acceptance.lambda0.proposed += m;
            acceptance.lambda0.accepted += accepted as u64;
        }
        let accepted = mh_lambda(&ctx, &mut state, &mut rng).map_err(at)?;
        acceptance.lambda.proposed += m;
        acceptance.lambda.accepted += accepted as u64;
        gibbs_mu(&ctx, &mut state, &mut rng);
        gibbs_sigma2(&ctx, &mut state, &mut rng);
        gibbs_tau(&ctx, &mut state, &mut rng).map_err(at)?;
        let moves = mh_beta(&ctx, &mut state, &mut rng).map_err(at)?;
        Acceptance::record_beta(&mut acceptance.beta, &mut acceptance.beta_fallbacks, &moves);
        let moves = mh_beta0(&ctx, &mut state, &mut rng).map_err(at)?;
        Acceptance::record_beta(
            &mut acceptance.beta0,
            &mut acceptance.beta_fallbacks,
            &moves,
        );

        debug_assert!(state.check_coherence().is_ok());
        if !state.gmrf.mu.is_finite() || !state.gmrf.sigma2.is_finite() {
            return Err(at(Error::NonFinite {
                what: "GMRF parameters".into(),
            }));
        }
        if it > config.warmup_iter {
            draws.push(Draw::from_state(&state));
        }
        if config.refresh > 0 && it % config.refresh == 0 {
            observer(&progress_line(it, total, config.warmup_iter));
        }
    }
    observer("MCMC sampler complete");
    if ctx.use_likelihood {
        for (k, c) in acceptance.beta.iter().enumerate() {
            observer(&acceptance_line(&format!("beta_{}", k + 1), c.rate()));
        }
    }
    let beta_names = current.column_names().to_vec();
    Ok(ChainOutput {
        draws,
        time_grid: linspace(ctx.end(), config.max_grid),
        end: ctx.end(),
        acceptance,
        beta_names,
        beta0_names: ctx
            .historical()
            .map(|h| h.column_names().to_vec())
            .unwrap_or_default(),
        borrow: ctx.borrow(),
        model: ctx.borrowing().model,
        seed: config.seed,
        chain,
    })
}

/// Runs `chains` independent chains concurrently, one stream each, and
/// returns them in chain order.
pub fn run_chains(
    current: &TrialData,
    historical: Option<&TrialData>,
    config: &ChainConfig,
    tuning: &TuningParams,
    chains: usize,
) -> Result<Vec<ChainOutput>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..chains as u64)
            .map(|c| {
                scope.spawn(move || {
                    run_chain_observed(current, historical, config, tuning, c, &mut |_| {})
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("chain thread panicked"))
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn progress_phase_switches_after_warmup() {
        assert_eq!(
            progress_line(2000, 8000, 2000),
            "Iteration: 2000 / 8000 (Warmup)"
        );
        assert_eq!(
            progress_line(2001, 8000, 2000),
            "Iteration: 2001 / 8000 (Sampling)"
        );
    }

    #[test]
    fn acceptance_line_format() {
        assert_eq!(
            acceptance_line("beta_X1", 2755.0 / 8000.0),
            "beta_X1 acceptance ratio: 0.344375"
        );
        assert_eq!(
            acceptance_line("beta_X2", 1.0 / 3.0),
            "beta_X2 acceptance ratio: 0.3333333"
        );
        assert_eq!(
            acceptance_line("beta_X3", 1.0),
            "beta_X3 acceptance ratio: 1"
        );
    }

    #[test]
    fn grid_spans_zero_to_end() {
        let g = linspace(3.0, 4);
        assert_eq!(g, vec![0.0, 1.0, 2.0, 3.0]);
    }
}
