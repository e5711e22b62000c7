//! Acceptance gate: one line per criterion, non-zero exit if any fails.

mod common;

use std::time::Instant;

use hazborrow::borrowing::{prior_weight_from_xi, xi_from_prior_weight, BorrowModel};
use hazborrow::posterior::draw_labels;
use hazborrow::posterior::{smooth_hazard, summarize_fixed, total_variation, FixedDraws};
use hazborrow::sampler::{run_chain, ChainConfig};
use hazborrow_oracles::quadrature::single_split_cdf;
use hazborrow_oracles::stats::{
    chi_square_gof, ks_one_sample, mean_var, thin, truncated_poisson_probabilities,
};
use hazborrow_oracles::{
    check_gmrf_oracle, check_likelihood_oracle, check_q0_oracle, check_refinement_invariance,
};

use common::{example_config, example_tuning, weibull_scenario};

/// Fixed before any run: the scenario and chain seed of criterion 1.
const SEED: u64 = 1;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn worked_example() -> Outcome {
    let (current, historical) = weibull_scenario(SEED);
    let config = example_config(SEED);
    let start = Instant::now();
    let out = run_chain(&current, Some(&historical), &config, &example_tuning()).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let summary = summarize_fixed(&FixedDraws::from_output(&out), 0.95).unwrap();
    let beta = summary.get("beta_1").unwrap();
    let j = summary.get("J").unwrap();
    let acc = out.acceptance.beta[0].rate();
    let (lo, hi) = (beta.quantiles[0], beta.quantiles[4]);
    let pass = (-0.60..=-0.35).contains(&beta.mean)
        && lo <= -0.5
        && hi >= -0.5
        && (3.4..=5.0).contains(&j.mean)
        && (0.28..=0.45).contains(&acc)
        && elapsed < 180.0;
    outcome(
        pass,
        format!(
            "beta_1 mean {:.3} 95% ({lo:.3}, {hi:.3}), mean J {:.2}, acceptance {acc:.4}, {elapsed:.1}s",
            beta.mean, j.mean
        ),
    )
}

fn calibration() -> Outcome {
    let p0 = prior_weight_from_xi(0.222, 0.001, 1.0).unwrap();
    let xi = xi_from_prior_weight(0.7, 0.001, 25.0).unwrap();
    outcome(
        (p0 - 0.80).abs() <= 0.005 && (xi - 0.30).abs() <= 0.02,
        format!("p0(xi=0.222) = {p0:.5}, xi(p0=0.7, d=25) = {xi:.5}"),
    )
}

fn q0_oracle() -> Outcome {
    let r = check_q0_oracle(1000, 2024);
    outcome(
        r.pass,
        format!("{} cases, max abs err {:.2e}", r.n_cases, r.max_abs_err),
    )
}

fn prior_recovery() -> Outcome {
    let (current, _) = weibull_scenario(SEED);
    let config = ChainConfig {
        iter: 200_000,
        warmup_iter: 1000,
        refresh: 0,
        seed: 11,
        borrow: false,
        sample_prior: true,
        max_grid: 2,
        ..example_config(11)
    };
    let out = run_chain(&current, None, &config, &example_tuning()).unwrap();
    let step = 50;
    let js: Vec<f64> = out.draws.iter().map(|d| d.j as f64).collect();
    let thinned = thin(&js, step);
    let mut counts = vec![0u64; 6];
    for &j in &thinned {
        counts[j as usize] += 1;
    }
    let chi = chi_square_gof(&counts, &truncated_poisson_probabilities(3.0, 5));
    let end = out.end;
    let s1: Vec<f64> = out
        .draws
        .iter()
        .step_by(step)
        .filter(|d| d.j == 1)
        .map(|d| d.splits[1])
        .collect();
    let ks = ks_one_sample(&s1, |x| single_split_cdf(x, end));
    outcome(
        chi.p_value > 0.01 && ks.p_value > 0.01,
        format!(
            "J chi-square p {:.3} over {} thinned draws, s_1 KS p {:.3} over {}",
            chi.p_value,
            thinned.len(),
            ks.p_value,
            s1.len()
        ),
    )
}

fn conjugate_recovery() -> Outcome {
    let (current, _) = weibull_scenario(SEED);
    let current = current.without_column("X_trt").unwrap();
    let mut config = ChainConfig {
        iter: 50_000,
        warmup_iter: 1000,
        refresh: 0,
        seed: 5,
        borrow: false,
        max_grid: 2,
        ..example_config(5)
    };
    config.borrowing = config.borrowing.with_model(BorrowModel::None);
    config.smoothing.j_max = 0;
    let tuning = example_tuning();
    let out = run_chain(&current, None, &config, &tuning).unwrap();
    let lambda: Vec<f64> = out.draws.iter().map(|d| d.lambda[0]).collect();
    let (m, v) = mean_var(&lambda);
    let d = current.event_count() as f64;
    let t: f64 = current.tte().iter().map(|&y| y.min(out.end)).sum();
    let shape = tuning.a_lambda + d;
    let rate = tuning.b_lambda + t;
    let (em, ev) = (shape / rate, shape / (rate * rate));
    let (rm, rv) = ((m / em - 1.0).abs(), (v / ev - 1.0).abs());
    outcome(
        rm < 0.02 && rv < 0.02,
        format!(
            "mean rel err {rm:.4}, variance rel err {rv:.4} over {} draws",
            lambda.len()
        ),
    )
}

fn gmrf_oracle() -> Outcome {
    let r = check_gmrf_oracle(1000, 7);
    outcome(
        r.pass,
        format!(
            "{} comparisons, max abs err {:.2e}",
            r.n_cases, r.max_abs_err
        ),
    )
}

fn likelihood_oracle() -> Outcome {
    let direct = check_likelihood_oracle(500, 3);
    let refine = check_refinement_invariance(500, 4);
    outcome(
        direct.pass && refine.pass,
        format!(
            "product form max rel err {:.2e}, refinement max rel err {:.2e}",
            direct.max_rel_err, refine.max_rel_err
        ),
    )
}

fn fixed_draws_bytes(config: &ChainConfig) -> Vec<u8> {
    let (current, historical) = weibull_scenario(SEED);
    let out = run_chain(&current, Some(&historical), config, &example_tuning()).unwrap();
    let mut buf = Vec::new();
    FixedDraws::from_output(&out)
        .write_csv(
            &mut buf,
            &draw_labels(std::slice::from_ref(&out), config.warmup_iter),
        )
        .unwrap();
    buf
}

fn determinism() -> Outcome {
    let config = example_config(99);
    let a = fixed_draws_bytes(&config);
    let b = fixed_draws_bytes(&config);
    outcome(
        a == b && !a.is_empty(),
        format!("{} bytes compared", a.len()),
    )
}

fn smoothing() -> Outcome {
    let (current, historical) = weibull_scenario(SEED);
    let tv = |c_lambda: f64| -> f64 {
        let seeds = [21, 22, 23];
        seeds
            .iter()
            .map(|&seed| {
                let mut config = example_config(seed);
                config.smoothing.c_lambda = c_lambda;
                let out =
                    run_chain(&current, Some(&historical), &config, &example_tuning()).unwrap();
                total_variation(&smooth_hazard(&out, 0.95).unwrap().mean)
            })
            .sum::<f64>()
            / seeds.len() as f64
    };
    let (smooth, rough) = (tv(0.8), tv(0.1));
    outcome(
        smooth < rough,
        format!("mean total variation {smooth:.4} at c=0.8 vs {rough:.4} at c=0.1"),
    )
}

type Check = fn() -> Outcome;

fn main() {
    let criteria: [(&str, Check); 9] = [
        ("1 worked example reproduction", worked_example),
        ("2 calibration golden values", calibration),
        ("3 q0 closed form vs quadrature", q0_oracle),
        ("4 prior recovery", prior_recovery),
        ("5 conjugate recovery", conjugate_recovery),
        ("6 banded vs dense GMRF", gmrf_oracle),
        ("7 likelihood oracle", likelihood_oracle),
        ("8 determinism", determinism),
        ("9 smoothing behaviour", smoothing),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let result = run();
        let status = if result.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!result.pass);
        println!(
            "criterion {name}: {status} ({}; {:.1}s)",
            result.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
