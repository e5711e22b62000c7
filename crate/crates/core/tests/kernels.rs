//! Conditional kernels against their analytic targets.

mod common;

use hazborrow::borrowing::{posterior_weight_q0, BorrowModel, BorrowingSpec};
use hazborrow::data::{Design, TrialData};
use hazborrow::model::{HazardVector, TimePartition};
use hazborrow::priors::GmrfState;
use hazborrow::sampler::{
    chain_rng, gibbs_mu, gibbs_sigma2, gibbs_tau, independence_gamma_step, init_state, mh_lambda0,
    run_chain, ChainConfig, ModelState, SamplerContext, Tau,
};
use hazborrow::simulate::{simulate_trial, BaselineHazard, SimSpec};
use hazborrow_oracles::dense::{ar1_correlation, inverse};
use hazborrow_oracles::likelihood::exponential_log_hazard_ratio;
use hazborrow_oracles::stats::{batch_means_se, inv_gamma_cdf, ks_one_sample, mean_var};
use statrs::distribution::{ContinuousCDF, Normal};

use common::{example_config, example_tuning, weibull_scenario};

const DRAWS: usize = 100_000;

/// A borrowing state on three intervals with hand-set hazards.
fn three_interval_state(ctx: &SamplerContext<'_>) -> ModelState {
    let mut rng = chain_rng(0, 0);
    let mut state = init_state(ctx, &mut rng).unwrap();
    let end = ctx.end();
    state.partition = TimePartition::with_interior(end, &[end / 3.0, 2.0 * end / 3.0]).unwrap();
    state.lambda = HazardVector::new(vec![0.4, 0.9, 1.3]).unwrap();
    state.lambda0 = Some(HazardVector::new(vec![0.5, 0.7, 1.6]).unwrap());
    state.tau = Tau::PerInterval(vec![0.1, 0.1, 0.1]);
    state.gmrf = GmrfState {
        mu: -0.2,
        sigma2: 0.7,
    };
    state.check_coherence().unwrap();
    state
}

fn ones_precision(c: f64, x: &[f64]) -> (f64, f64) {
    let m = x.len();
    let q = inverse(&ar1_correlation(c, m), m);
    let mut ones_q_ones = 0.0;
    let mut ones_q_x = 0.0;
    for i in 0..m {
        for k in 0..m {
            ones_q_ones += q[i * m + k];
            ones_q_x += q[i * m + k] * x[k];
        }
    }
    (ones_q_ones, ones_q_x)
}

#[test]
fn gibbs_mu_matches_analytic_normal() {
    let (cur, hist) = weibull_scenario(3);
    let config = example_config(3);
    let ctx = SamplerContext::new(&cur, Some(&hist), &config, &example_tuning()).unwrap();
    let mut state = three_interval_state(&ctx);
    let x = state.anchor().logs();
    let (qq, qx) = ones_precision(config.smoothing.c_lambda, &x);
    let target = Normal::new(qx / qq, (state.gmrf.sigma2 / qq).sqrt()).unwrap();
    let mut rng = chain_rng(1, 0);
    let draws: Vec<f64> = (0..DRAWS)
        .map(|_| {
            gibbs_mu(&ctx, &mut state, &mut rng);
            state.gmrf.mu
        })
        .collect();
    let ks = ks_one_sample(&draws, |v| target.cdf(v));
    assert!(ks.p_value > 0.01, "{ks:?}");
}

#[test]
fn gibbs_mu_single_interval_centres_on_the_observation() {
    let (cur, hist) = weibull_scenario(3);
    let config = example_config(3);
    let ctx = SamplerContext::new(&cur, Some(&hist), &config, &example_tuning()).unwrap();
    let mut state = three_interval_state(&ctx);
    state.partition = TimePartition::single(ctx.end()).unwrap();
    state.lambda = HazardVector::new(vec![0.8]).unwrap();
    state.lambda0 = Some(HazardVector::new(vec![0.6]).unwrap());
    state.tau = Tau::PerInterval(vec![0.1]);
    let mut rng = chain_rng(2, 0);
    let draws: Vec<f64> = (0..DRAWS)
        .map(|_| {
            gibbs_mu(&ctx, &mut state, &mut rng);
            state.gmrf.mu
        })
        .collect();
    let target = Normal::new(0.6f64.ln(), state.gmrf.sigma2.sqrt()).unwrap();
    assert!(ks_one_sample(&draws, |v| target.cdf(v)).p_value > 0.01);
}

#[test]
fn gibbs_sigma2_matches_analytic_inverse_gamma() {
    let (cur, hist) = weibull_scenario(3);
    let config = example_config(3);
    let ctx = SamplerContext::new(&cur, Some(&hist), &config, &example_tuning()).unwrap();
    let mut state = three_interval_state(&ctx);
    let c = config.smoothing.c_lambda;
    let r: Vec<f64> = state
        .anchor()
        .logs()
        .iter()
        .map(|v| v - state.gmrf.mu)
        .collect();
    let q = inverse(&ar1_correlation(c, 3), 3);
    let mut quad = 0.0;
    for i in 0..3 {
        for k in 0..3 {
            quad += r[i] * q[i * 3 + k] * r[k];
        }
    }
    let shape = config.smoothing.a_sigma + 1.5;
    let scale = config.smoothing.b_sigma + quad / 2.0;
    let mut rng = chain_rng(3, 0);
    let draws: Vec<f64> = (0..DRAWS)
        .map(|_| {
            gibbs_sigma2(&ctx, &mut state, &mut rng);
            state.gmrf.sigma2
        })
        .collect();
    let ks = ks_one_sample(&draws, |v| inv_gamma_cdf(v, shape, scale));
    assert!(ks.p_value > 0.01, "{ks:?}");
}

fn tau_draws(ctx: &SamplerContext<'_>, state: &mut ModelState, seed: u64) -> Vec<f64> {
    let mut rng = chain_rng(seed, 0);
    (0..DRAWS)
        .map(|_| {
            gibbs_tau(ctx, state, &mut rng).unwrap();
            state.tau.for_interval(0)
        })
        .collect()
}

#[test]
fn gibbs_tau_component_frequency_matches_q0() {
    let (cur, hist) = weibull_scenario(3);
    let config = example_config(3);
    let spec = config.borrowing;
    let ctx = SamplerContext::new(&cur, Some(&hist), &config, &example_tuning()).unwrap();
    let mut state = three_interval_state(&ctx);
    // A difference near the crossing point makes both components frequent.
    let delta: f64 = 0.2;
    state.lambda = HazardVector::new(vec![0.5 * delta.exp(), 0.7, 1.6]).unwrap();
    let q0 = posterior_weight_q0(delta, &spec).unwrap();
    let draws = tau_draws(&ctx, &mut state, 4);
    // Components are latent, so their frequency is read through the mixture CDF at a cut.
    let cut = 0.05;
    let half = delta * delta / 2.0;
    let expected = q0 * inv_gamma_cdf(cut, spec.a_tau + 0.5, spec.b_tau + half)
        + (1.0 - q0) * inv_gamma_cdf(cut, spec.c_tau + 0.5, spec.d_tau + half);
    let observed = draws.iter().filter(|&&t| t < cut).count() as f64 / DRAWS as f64;
    assert!(
        (observed - expected).abs() < 0.01,
        "{observed} vs {expected} (q0 {q0})"
    );
    let ks = ks_one_sample(&draws, |t| {
        q0 * inv_gamma_cdf(t, spec.a_tau + 0.5, spec.b_tau + half)
            + (1.0 - q0) * inv_gamma_cdf(t, spec.c_tau + 0.5, spec.d_tau + half)
    });
    assert!(ks.p_value > 0.01, "{ks:?}");
}

#[test]
fn gibbs_tau_uni_at_zero_difference() {
    let (cur, hist) = weibull_scenario(3);
    let mut config = example_config(3);
    config.borrowing = config.borrowing.with_model(BorrowModel::Uni);
    let spec = config.borrowing;
    let ctx = SamplerContext::new(&cur, Some(&hist), &config, &example_tuning()).unwrap();
    let mut state = three_interval_state(&ctx);
    state.lambda = state.lambda0.clone().unwrap();
    let draws = tau_draws(&ctx, &mut state, 5);
    let ks = ks_one_sample(&draws, |t| inv_gamma_cdf(t, spec.a_tau + 0.5, spec.b_tau));
    assert!(ks.p_value > 0.01, "{ks:?}");
}

#[test]
fn gibbs_tau_mix_with_full_lump_is_uni() {
    let (cur, hist) = weibull_scenario(3);
    let mut mix = example_config(3);
    mix.borrowing.p_0 = 1.0;
    let mut uni = mix.clone();
    uni.borrowing = uni.borrowing.with_model(BorrowModel::Uni);
    let tuning = example_tuning();
    let ctx_mix = SamplerContext::new(&cur, Some(&hist), &mix, &tuning).unwrap();
    let ctx_uni = SamplerContext::new(&cur, Some(&hist), &uni, &tuning).unwrap();
    let mut a = three_interval_state(&ctx_mix);
    let mut b = three_interval_state(&ctx_uni);
    assert_eq!(
        tau_draws(&ctx_mix, &mut a, 6),
        tau_draws(&ctx_uni, &mut b, 6)
    );
}

#[test]
fn gamma_step_with_target_equal_to_proposal_always_accepts() {
    // With the GMRF and commensurate factors removed, the historical hazard
    // target is the conjugate gamma the proposal is drawn from.
    let (shape, rate) = (37.01, 52.3);
    let target = |x: f64| (shape - 1.0) * x.ln() - rate * x;
    let mut rng = chain_rng(7, 0);
    let mut x = 0.5;
    for _ in 0..10_000 {
        let (next, accepted) = independence_gamma_step(&mut rng, x, shape, rate, target).unwrap();
        assert!(accepted);
        x = next;
    }
}

#[test]
fn mh_lambda0_under_vague_priors_recovers_conjugate_posterior() {
    let (cur, hist) = weibull_scenario(8);
    let mut config = example_config(8);
    config.smoothing.j_max = 0;
    let tuning = example_tuning();
    let ctx = SamplerContext::new(&cur, Some(&hist), &config, &tuning).unwrap();
    let mut rng = chain_rng(8, 0);
    let mut state = init_state(&ctx, &mut rng).unwrap();
    assert_eq!(state.j(), 0);
    state.gmrf = GmrfState {
        mu: 0.0,
        sigma2: 1e8,
    };
    state.tau = Tau::PerInterval(vec![1e8]);
    let draws: Vec<f64> = (0..50_000)
        .map(|_| {
            mh_lambda0(&ctx, &mut state, &mut rng).unwrap();
            state.lambda0.as_ref().unwrap().as_slice()[0]
        })
        .collect();
    let d0 = hist.event_count() as f64;
    let t0: f64 = hist.tte().iter().map(|&y| y.min(ctx.end())).sum();
    let want = (tuning.a_lambda + d0) / (tuning.b_lambda + t0);
    let (m, _) = mean_var(&draws);
    assert!((m / want - 1.0).abs() < 0.02, "{m} vs {want}");
}

#[test]
fn beta_posterior_centres_on_exponential_mle() {
    let spec = SimSpec {
        n_control: 2000,
        n_treatment: 2000,
        n_historical: 0,
        hazard: BaselineHazard::Piecewise {
            cuts: vec![],
            lambdas: vec![0.8],
        },
        beta_trt: -0.4,
        censor: None,
        seed: 9,
        historical_shift: 0.0,
    };
    let (cur, _) = simulate_trial(&spec).unwrap();
    let config = ChainConfig {
        iter: 5000,
        warmup_iter: 1000,
        refresh: 0,
        borrow: false,
        max_grid: 2,
        ..example_config(9)
    };
    let mut config = config;
    config.smoothing.j_max = 0;
    config.borrowing = config.borrowing.with_model(BorrowModel::None);
    let out = run_chain(&cur, None, &config, &example_tuning()).unwrap();
    let beta: Vec<f64> = out.draws.iter().map(|d| d.beta[0]).collect();
    let (m, _) = mean_var(&beta);
    let se = batch_means_se(&beta, 50);
    let group: Vec<bool> = cur.design().column(0).map(|x| x == 1.0).collect();
    let mle = exponential_log_hazard_ratio(cur.tte(), cur.event(), &group);
    assert!(
        (m - mle).abs() < 3.0 * se,
        "posterior mean {m}, mle {mle}, mc se {se}"
    );
}

#[test]
fn flat_likelihood_in_beta_accepts_every_proposal() {
    // An all-zero covariate leaves the conditional flat in beta.
    let n = 30;
    let tte: Vec<f64> = (1..=n).map(|i| i as f64 / 10.0).collect();
    let event = vec![true; n];
    let rows = vec![vec![0.0]; n];
    let cur = TrialData::new(
        tte,
        event,
        Design::from_rows(&rows).unwrap(),
        vec!["X1".into()],
        None,
    )
    .unwrap();
    let config = ChainConfig {
        iter: 500,
        warmup_iter: 0,
        refresh: 0,
        borrow: false,
        max_grid: 2,
        ..example_config(10)
    };
    let mut config = config;
    config.borrowing = BorrowingSpec::default().with_model(BorrowModel::None);
    let out = run_chain(&cur, None, &config, &example_tuning()).unwrap();
    assert_eq!(out.acceptance.beta[0].rate(), 1.0);
}
