//! Randomised comparisons between the production code and the oracles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use hazborrow::borrowing::{posterior_weight_q0, BorrowModel, BorrowingSpec};
use hazborrow::data::{Design, TrialData};
use hazborrow::model::{log_likelihood, HazardVector, TimePartition};
use hazborrow::priors::{gmrf_conditional, gmrf_log_density, GmrfState};
use hazborrow::sampler::beta_log_conditional;

use crate::dense::{dense_conditional, dense_gmrf_log_density};
use crate::likelihood::direct_log_likelihood;
use crate::quadrature::q0_by_quadrature;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub name: String,
    pub max_abs_err: f64,
    pub max_rel_err: f64,
    pub n_cases: usize,
    pub tolerance: f64,
    pub pass: bool,
}

impl OracleReport {
    fn new(name: &str, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            max_abs_err: 0.0,
            max_rel_err: 0.0,
            n_cases: 0,
            tolerance,
            pass: true,
        }
    }

    fn record(&mut self, got: f64, want: f64) {
        let abs = (got - want).abs();
        let rel = abs / want.abs().max(f64::MIN_POSITIVE);
        self.max_abs_err = self
            .max_abs_err
            .max(if abs.is_nan() { f64::INFINITY } else { abs });
        self.max_rel_err = self
            .max_rel_err
            .max(if rel.is_nan() { f64::INFINITY } else { rel });
        self.n_cases += 1;
    }

    /// Relative error with the reference floored at one in magnitude.
    fn record_scaled(&mut self, got: f64, want: f64) {
        let abs = (got - want).abs();
        self.max_abs_err = self.max_abs_err.max(abs);
        self.max_rel_err = self.max_rel_err.max(abs / want.abs().max(1.0));
        self.n_cases += 1;
    }

    fn finish_abs(mut self) -> Self {
        self.pass = self.max_abs_err < self.tolerance;
        self
    }

    fn finish_rel(mut self) -> Self {
        self.pass = self.max_rel_err < self.tolerance;
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serialises")
    }
}

#[derive(Clone)]
struct Instance {
    tte: Vec<f64>,
    event: Vec<bool>,
    x: Vec<Vec<f64>>,
    beta: Vec<f64>,
    splits: Vec<f64>,
    lambdas: Vec<f64>,
}

impl Instance {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        let n = rng.random_range(1..=8);
        let p = rng.random_range(0..=2);
        let tte: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..3.0)).collect();
        let mut event: Vec<bool> = (0..n).map(|_| rng.random_bool(0.7)).collect();
        event[0] = true;
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..p).map(|_| rng.random_range(-1.5..1.5)).collect())
            .collect();
        let beta: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
        // The endpoint sometimes truncates follow-up.
        let end = rng.random_range(0.5..3.5);
        let j = rng.random_range(0..=4);
        let mut interior: Vec<f64> = (0..j).map(|_| rng.random_range(0.01..end * 0.99)).collect();
        interior.sort_by(f64::total_cmp);
        interior.dedup();
        let mut splits = vec![0.0];
        splits.extend(interior);
        splits.push(end);
        let lambdas = (0..splits.len() - 1)
            .map(|_| rng.random_range(0.05..2.5))
            .collect();
        Self {
            tte,
            event,
            x,
            beta,
            splits,
            lambdas,
        }
    }

    fn data(&self) -> TrialData {
        let p = self.beta.len();
        let design = if p == 0 {
            Design::empty(self.tte.len())
        } else {
            Design::from_rows(&self.x).expect("rectangular design")
        };
        let names = (1..=p).map(|k| format!("X{k}")).collect();
        TrialData::new(self.tte.clone(), self.event.clone(), design, names, None)
            .expect("valid instance")
    }

    fn production(&self) -> f64 {
        let partition = TimePartition::new(self.splits.clone()).expect("valid splits");
        let lambdas = HazardVector::new(self.lambdas.clone()).expect("positive");
        log_likelihood(&self.data(), &self.beta, &partition, &lambdas).expect("finite")
    }

    fn direct(&self) -> f64 {
        direct_log_likelihood(
            &self.tte,
            &self.event,
            &self.x,
            &self.beta,
            &self.splits,
            &self.lambdas,
        )
    }
}

/// Product-form likelihood against the sufficient-statistic form on random
/// small instances plus three fixed ones. Relative tolerance 1e-10.
pub fn check_likelihood_oracle(n_cases: usize, seed: u64) -> OracleReport {
    let mut report = OracleReport::new("likelihood", 1e-10);
    let fixed = [
        Instance {
            tte: vec![1.0],
            event: vec![true],
            x: vec![vec![]],
            beta: vec![],
            splits: vec![0.0, 1.0],
            lambdas: vec![1.0],
        },
        Instance {
            tte: vec![0.3, 0.9, 1.4, 2.2, 2.6],
            event: vec![true, false, true, true, false],
            x: vec![vec![1.0], vec![0.0], vec![1.0], vec![0.0], vec![1.0]],
            beta: vec![-0.4],
            splits: vec![0.0, 0.8, 1.9, 2.6],
            lambdas: vec![0.5, 1.2, 0.7],
        },
        Instance {
            tte: vec![0.3, 0.9, 1.4, 2.2, 2.6],
            event: vec![true, false, true, true, false],
            x: vec![vec![]; 5],
            beta: vec![],
            splits: vec![0.0, 0.5, 1.0, 1.5, 2.0, 2.6],
            lambdas: vec![0.8; 5],
        },
    ];
    for inst in &fixed {
        report.record(inst.production(), inst.direct());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n_cases {
        let inst = Instance::random(&mut rng);
        report.record(inst.production(), inst.direct());
    }
    report.finish_rel()
}

/// Splitting an interval while keeping its hazard leaves the production
/// likelihood unchanged. Relative tolerance 1e-12.
pub fn check_refinement_invariance(n_cases: usize, seed: u64) -> OracleReport {
    let mut report = OracleReport::new("refinement_invariance", 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n_cases {
        let inst = Instance::random(&mut rng);
        let j = rng.random_range(0..inst.lambdas.len());
        let (lo, hi) = (inst.splits[j], inst.splits[j + 1]);
        let at = lo + rng.random_range(0.1..0.9) * (hi - lo);
        let mut refined = inst.clone();
        refined.splits.insert(j + 1, at);
        refined.lambdas.insert(j + 1, inst.lambdas[j]);
        report.record(refined.production(), inst.production());
    }
    report.finish_rel()
}

/// Closed-form lump weight against quadrature of both inverse-gamma
/// marginals. Half the cases use unit shapes, the rest general shapes.
/// Absolute tolerance 1e-6.
pub fn check_q0_oracle(n_cases: usize, seed: u64) -> OracleReport {
    let mut report = OracleReport::new("q0", 1e-6);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = |a, b, c, d, p| BorrowingSpec {
        model: BorrowModel::Mix,
        a_tau: a,
        b_tau: b,
        c_tau: c,
        d_tau: d,
        p_0: p,
    };
    report.record(
        posterior_weight_q0(0.0, &spec(1.0, 0.5, 1.0, 0.5 + 1e-12, 0.8)).unwrap(),
        0.8,
    );
    for i in 0..n_cases {
        let b = 10f64.powf(rng.random_range(-4.0..-1.0));
        let d = b * 10f64.powf(rng.random_range(0.5..4.0));
        let p = rng.random_range(0.05..0.99);
        let delta = rng.random_range(-2.0..2.0);
        let (a, c) = if i % 2 == 0 {
            (1.0, 1.0)
        } else {
            (rng.random_range(0.5..3.0), rng.random_range(0.5..3.0))
        };
        let got = posterior_weight_q0(delta, &spec(a, b, c, d, p)).unwrap();
        report.record(got, q0_by_quadrature(delta, a, b, c, d, p));
    }
    report.finish_abs()
}

/// Banded GMRF density and conditionals against the dense covariance.
/// Absolute tolerance 1e-8.
pub fn check_gmrf_oracle(n_cases: usize, seed: u64) -> OracleReport {
    let mut report = OracleReport::new("gmrf", 1e-8);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n_cases {
        let m = rng.random_range(1..=8);
        let c = rng.random_range(0.0..0.95);
        let state = GmrfState {
            mu: rng.random_range(-3.0..1.0),
            sigma2: rng.random_range(0.05..4.0),
        };
        let x: Vec<f64> = (0..m).map(|_| rng.random_range(-5.0..2.0)).collect();
        let got = gmrf_log_density(&x, state, c).unwrap();
        report.record(got, dense_gmrf_log_density(&x, state.mu, state.sigma2, c));
        let j = rng.random_range(0..m);
        let (cm, cv) = gmrf_conditional(&x, j, state, c);
        let (dm, dv) = dense_conditional(&x, j, state.mu, state.sigma2, c);
        report.record(cm, dm);
        report.record(cv, dv);
    }
    report.finish_abs()
}

/// Analytic gradient against a central difference of the log conditional
/// and analytic curvature against a central difference of the gradient,
/// step 1e-5. Relative tolerance 1e-6.
pub fn check_beta_derivatives(n_cases: usize, seed: u64) -> OracleReport {
    let mut report = OracleReport::new("beta_derivatives", 1e-6);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-5;
    for _ in 0..n_cases {
        let n = rng.random_range(5..40);
        let p = rng.random_range(1..=3);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..p).map(|_| rng.random_range(-1.5..1.5)).collect())
            .collect();
        let tte: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..3.0)).collect();
        let mut event: Vec<bool> = (0..n).map(|_| rng.random_bool(0.6)).collect();
        event[0] = true;
        let names = (1..=p).map(|k| format!("X{k}")).collect();
        let data = TrialData::new(tte, event, Design::from_rows(&rows).unwrap(), names, None)
            .expect("valid instance");
        let cumhaz: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..2.0)).collect();
        let beta: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
        let k = rng.random_range(0..p);
        let at = |b: f64| {
            let mut v = beta.clone();
            v[k] = b;
            beta_log_conditional(&data, &cumhaz, &v, k, 2.5)
        };
        let (_, g, curv) = at(beta[k]);
        let fd_g = (at(beta[k] + h).0 - at(beta[k] - h).0) / (2.0 * h);
        let fd_h = (at(beta[k] + h).1 - at(beta[k] - h).1) / (2.0 * h);
        report.record_scaled(g, fd_g);
        report.record_scaled(curv, fd_h);
    }
    report.finish_rel()
}
