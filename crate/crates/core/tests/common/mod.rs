#![allow(dead_code)]

use hazborrow::borrowing::{BorrowModel, BorrowingSpec};
use hazborrow::data::TrialData;
use hazborrow::priors::SmoothingSpec;
use hazborrow::sampler::{ChainConfig, TuningParams};
use hazborrow::simulate::{simulate_trial, SimSpec};

/// Weibull scenario: 250 current subjects (150 treated), 100 historical
/// controls, shape 1.5, scale 0.4, log hazard ratio -0.5.
pub fn weibull_scenario(seed: u64) -> (TrialData, TrialData) {
    let (current, historical) = simulate_trial(&SimSpec {
        seed,
        ..SimSpec::default()
    })
    .expect("default scenario simulates");
    (current, historical.expect("historical arm requested"))
}

/// Mixture borrowing with the hyperparameters of the worked example.
pub fn example_config(seed: u64) -> ChainConfig {
    ChainConfig {
        iter: 6000,
        warmup_iter: 2000,
        refresh: 2000,
        seed,
        borrow: true,
        borrowing: BorrowingSpec {
            model: BorrowModel::Mix,
            a_tau: 1.0,
            b_tau: 0.001,
            c_tau: 1.0,
            d_tau: 1.0,
            p_0: 0.8,
        },
        smoothing: SmoothingSpec {
            phi: 3.0,
            j_max: 5,
            c_lambda: 0.8,
            a_sigma: 1.0,
            b_sigma: 1.0,
        },
        max_grid: 2000,
        verbose: false,
        sample_prior: false,
    }
}

pub fn example_tuning() -> TuningParams {
    TuningParams {
        cprop_beta: 3.25,
        alpha: 0.4,
        pi_b: 0.5,
        ..TuningParams::default()
    }
}
