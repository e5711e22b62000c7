//! Metropolis-Hastings-within-Gibbs sampler over the joint borrowing model,
//! with reversible-jump moves on the number of split points.
//!
//! One sweep runs, in order: [`rjmcmc_step`], [`move_split_location`],
//! [`mh_lambda0`], [`mh_lambda`], [`gibbs_mu`], [`gibbs_sigma2`],
//! [`gibbs_tau`], [`mh_beta`] and [`mh_beta0`]. Every kernel draws from a
//! single per-chain ChaCha stream in a fixed order, so a seed and a
//! configuration determine the chain completely.

mod chain;
mod kernels;
mod rjmcmc;
mod state;

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::borrowing::BorrowingSpec;
use crate::error::{Error, Result};
use crate::priors::SmoothingSpec;

pub use chain::{
    acceptance_line, progress_line, run_chain, run_chain_observed, run_chains, Acceptance,
    ChainOutput, Draw, MoveCounter,
};
pub use kernels::{
    beta_log_conditional, gibbs_mu, gibbs_sigma2, gibbs_tau, independence_gamma_step, mh_beta,
    mh_beta0, mh_lambda, mh_lambda0, newton_proposal, BetaMove,
};
pub use rjmcmc::{
    birth_death_probabilities, merge_heights, move_split_location, rjmcmc_step, split_heights,
    JumpKind, JumpOutcome,
};
pub use state::{init_state, ModelState, SamplerContext, Tau};

/// Counter-based generator used for every chain.
pub type ChainRng = rand_chacha::ChaCha8Rng;

/// Generator for stream `chain` of `seed`. Streams of one seed never overlap.
pub fn chain_rng(seed: u64, chain: u64) -> ChainRng {
    let mut rng = ChainRng::seed_from_u64(seed);
    rng.set_stream(chain);
    rng
}

/// Proposal tuning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuningParams {
    /// Scale of the Newton proposal for the current regression coefficients.
    pub cprop_beta: f64,
    /// Same for the historical coefficients.
    pub cprop_beta0: f64,
    /// Birth probability for interior `J`.
    pub pi_b: f64,
    /// Power applied to the historical likelihood in the current-hazard proposal.
    pub alpha: f64,
    /// Vague gamma prior combined with the likelihood in hazard proposals.
    pub a_lambda: f64,
    pub b_lambda: f64,
}

impl Default for TuningParams {
    fn default() -> Self {
        Self {
            cprop_beta: 0.5,
            cprop_beta0: 0.5,
            pi_b: 0.5,
            alpha: 0.4,
            a_lambda: 0.01,
            b_lambda: 0.01,
        }
    }
}

impl TuningParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.cprop_beta > 0.0 && self.cprop_beta0 > 0.0) {
            return Err(Error::param("cprop_beta", "must be positive"));
        }
        if !(self.pi_b > 0.0 && self.pi_b < 1.0) {
            return Err(Error::param("pi_b", "must lie in (0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::param("alpha", "must lie in [0, 1]"));
        }
        if !(self.a_lambda > 0.0 && self.b_lambda > 0.0) {
            return Err(Error::param("a_lambda/b_lambda", "must be positive"));
        }
        Ok(())
    }
}

/// Run length, model choice and output settings for one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    /// Stored iterations after warmup.
    pub iter: usize,
    pub warmup_iter: usize,
    /// Progress is reported every `refresh` sweeps; 0 disables it.
    pub refresh: usize,
    pub seed: u64,
    pub borrow: bool,
    pub borrowing: BorrowingSpec,
    pub smoothing: SmoothingSpec,
    /// Points of the time grid used for smoothed curves.
    pub max_grid: usize,
    pub verbose: bool,
    /// Drop the likelihood and sample the prior.
    pub sample_prior: bool,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            iter: 6000,
            warmup_iter: 2000,
            refresh: 2000,
            seed: 1,
            borrow: true,
            borrowing: BorrowingSpec::default(),
            smoothing: SmoothingSpec::default(),
            max_grid: 2000,
            verbose: false,
            sample_prior: false,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iter == 0 {
            return Err(Error::param("iter", "must be positive"));
        }
        if self.max_grid < 2 {
            return Err(Error::param("max_grid", "need at least two grid points"));
        }
        self.smoothing.validate()?;
        if self.borrow {
            self.borrowing.validate()?;
            if self.borrowing.model == crate::borrowing::BorrowModel::None {
                return Err(Error::param(
                    "model_choice",
                    "`none` is only valid without borrowing",
                ));
            }
        }
        Ok(())
    }

    pub fn total_iterations(&self) -> usize {
        self.iter + self.warmup_iter
    }
}
