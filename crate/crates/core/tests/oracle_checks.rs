//! Production numerics against the brute-force oracles. Set
//! `HAZBORROW_ORACLE_CASES` to raise the number of random cases.

use hazborrow::borrowing::{posterior_weight_q0, BorrowModel, BorrowingSpec};
use hazborrow::data::{Design, TrialData};
use hazborrow::sampler::beta_log_conditional;
use hazborrow_oracles::{
    check_beta_derivatives, check_gmrf_oracle, check_likelihood_oracle, check_q0_oracle,
    check_refinement_invariance, OracleReport,
};

fn cases(default: usize) -> usize {
    std::env::var("HAZBORROW_ORACLE_CASES")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(default)
}

fn assert_report(r: &OracleReport) {
    assert!(r.pass, "{}", r.to_json());
    assert!(r.n_cases > 0);
}

#[test]
fn likelihood_matches_product_form() {
    assert_report(&check_likelihood_oracle(cases(200), 31));
}

#[test]
fn likelihood_is_invariant_to_refinement() {
    assert_report(&check_refinement_invariance(cases(200), 32));
}

#[test]
fn q0_matches_quadrature() {
    assert_report(&check_q0_oracle(cases(200), 33));
}

#[test]
fn banded_gmrf_matches_dense() {
    assert_report(&check_gmrf_oracle(cases(200), 34));
}

#[test]
fn beta_derivatives_match_finite_differences() {
    assert_report(&check_beta_derivatives(cases(200), 35));
}

#[test]
fn reports_serialise_for_ci() {
    let r = check_gmrf_oracle(5, 1);
    let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(v["name"], "gmrf");
    assert_eq!(v["pass"], true);
    assert!(v["max_abs_err"].as_f64().unwrap() < 1e-8);
}

#[test]
fn q0_golden_value_at_tolerable_difference() {
    let spec = BorrowingSpec {
        model: BorrowModel::Mix,
        a_tau: 1.0,
        b_tau: 0.001,
        c_tau: 1.0,
        d_tau: 1.0,
        p_0: 0.8,
    };
    // The crossing point of these hyperparameters is 0.2228, so 0.222 sits just below it.
    let q = posterior_weight_q0(0.222, &spec).unwrap();
    assert!((q - 0.5).abs() < 0.01, "{q}");
    let q = posterior_weight_q0(0.22282, &spec).unwrap();
    assert!((q - 0.5).abs() < 1e-3, "{q}");
}

#[test]
fn zero_covariate_gradient_vanishes() {
    let data = TrialData::new(
        vec![0.5, 1.0, 1.5],
        vec![true, true, false],
        Design::from_rows(&[vec![0.0], vec![0.0], vec![0.0]]).unwrap(),
        vec!["X1".into()],
        None,
    )
    .unwrap();
    let (_, g, h) = beta_log_conditional(&data, &[0.3, 0.8, 1.1], &[0.4], 0, 1.5);
    assert_eq!(g, 0.0);
    assert_eq!(h, 0.0);
}

#[test]
fn exponential_score_is_closed_form() {
    // Single binary covariate, cumulative hazard lambda * y: the score is
    // d1 - exp(beta) * lambda * T1.
    let tte = vec![0.4, 1.2, 0.7, 2.0, 0.9];
    let event = vec![true, false, true, true, true];
    let x = [1.0, 1.0, 0.0, 1.0, 0.0];
    let rows: Vec<Vec<f64>> = x.iter().map(|&v| vec![v]).collect();
    let data = TrialData::new(
        tte.clone(),
        event.clone(),
        Design::from_rows(&rows).unwrap(),
        vec!["X1".into()],
        None,
    )
    .unwrap();
    let lambda = 0.6;
    let beta = -0.3f64;
    let cumhaz: Vec<f64> = tte.iter().map(|&y| lambda * y).collect();
    let (_, g, _) = beta_log_conditional(&data, &cumhaz, &[beta], 0, 2.0);
    let d1 = 2.0;
    let t1 = 0.4 + 1.2 + 2.0;
    let want = d1 - beta.exp() * lambda * t1;
    assert!((g - want).abs() < 1e-12);
}
