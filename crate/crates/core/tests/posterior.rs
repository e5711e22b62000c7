mod common;

use hazborrow::model::{cumulative_hazard, TimePartition};
use hazborrow::posterior::{
    draw_labels, hazard_ratio_density, pool_chains, predictive_hazard, predictive_survival,
    quantile, smooth_hazard, smooth_hazard_historical, summarize_fixed, write_splits_csv,
    FixedDraws,
};
use hazborrow::sampler::{run_chain, run_chains, ChainConfig, ChainOutput};

use common::{example_config, example_tuning, weibull_scenario};

fn fit() -> ChainOutput {
    let (cur, hist) = weibull_scenario(4);
    let config = ChainConfig {
        iter: 800,
        warmup_iter: 200,
        refresh: 0,
        max_grid: 41,
        ..example_config(4)
    };
    run_chain(&cur, Some(&hist), &config, &example_tuning()).unwrap()
}

/// Interval containing `t`, with the last interval closed at the endpoint.
fn brute_interval(splits: &[f64], t: f64) -> usize {
    let m = splits.len() - 1;
    (0..m)
        .find(|&j| t >= splits[j] && t < splits[j + 1])
        .unwrap_or(m - 1)
}

#[test]
fn smoothed_hazard_is_the_draw_average() {
    let out = fit();
    let curve = smooth_hazard(&out, 0.95).unwrap();
    assert_eq!(curve.time.len(), 41);
    assert_eq!(curve.time[0], 0.0);
    assert_eq!(*curve.time.last().unwrap(), out.end);
    for (g, &t) in curve.time.iter().enumerate() {
        let mut values: Vec<f64> = out
            .draws
            .iter()
            .map(|d| d.lambda[brute_interval(&d.splits, t)])
            .collect();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        assert!((curve.mean[g] - mean).abs() <= 1e-12 * mean.abs());
        values.sort_by(f64::total_cmp);
        assert_eq!(curve.lower[g], quantile(&values, (1.0 - 0.95) / 2.0));
        assert_eq!(curve.upper[g], quantile(&values, 1.0 - (1.0 - 0.95) / 2.0));
        assert!(curve.lower[g] <= curve.median[g] && curve.median[g] <= curve.upper[g]);
    }
    let hist = smooth_hazard_historical(&out, 0.9).unwrap();
    assert!(hist.mean.iter().all(|v| v.is_finite() && *v > 0.0));
}

#[test]
fn predictive_survival_is_exp_of_minus_cumulative_hazard() {
    let out = fit();
    let surv = predictive_survival(&out, &[1.0], 0.95).unwrap();
    let haz = predictive_hazard(&out, &[1.0], 0.95).unwrap();
    for (g, &t) in surv.time.iter().enumerate() {
        let n = out.draws.len() as f64;
        let s: f64 = out
            .draws
            .iter()
            .map(|d| {
                let p = TimePartition::new(d.splits.clone()).unwrap();
                (-cumulative_hazard(t, &p, &d.lambda) * d.beta[0].exp()).exp()
            })
            .sum::<f64>()
            / n;
        assert!((surv.mean[g] - s).abs() < 1e-12);
        let h: f64 = out
            .draws
            .iter()
            .map(|d| d.lambda[brute_interval(&d.splits, t)] * d.beta[0].exp())
            .sum::<f64>()
            / n;
        assert!((haz.mean[g] - h).abs() <= 1e-12 * h);
    }
    assert_eq!(surv.mean[0], 1.0);
    assert!(surv.mean.windows(2).all(|w| w[1] <= w[0]));
    assert!(predictive_survival(&out, &[1.0, 0.0], 0.95).is_err());
}

#[test]
fn hazard_ratio_density_summarises_exp_beta() {
    let out = fit();
    let hr = hazard_ratio_density(&out, &[1.0], 0.95).unwrap();
    assert_eq!(hr.samples.len(), out.draws.len());
    for (s, d) in hr.samples.iter().zip(&out.draws) {
        assert_eq!(*s, d.beta[0].exp());
    }
    assert!(hr.lower < hr.mean && hr.mean < hr.upper);
}

#[test]
fn fixed_draws_round_trip_and_summary_schema() {
    let out = fit();
    let draws = FixedDraws::from_output(&out);
    assert_eq!(draws.ids, ["J", "mu", "sigma2", "beta_1"]);
    let mut buf = Vec::new();
    draws
        .write_csv(&mut buf, &draw_labels(std::slice::from_ref(&out), 200))
        .unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("chain,iteration,J,mu,sigma2,beta_1\n0,201,"));
    let back = FixedDraws::read_csv(buf.as_slice()).unwrap();
    assert_eq!(back, draws);

    let s95 = summarize_fixed(&back, 0.95).unwrap();
    assert_eq!(s95.column_names()[3], "2.5%");
    assert_eq!(s95.column_names()[7], "97.5%");
    let s90 = summarize_fixed(&back, 0.9).unwrap();
    assert_eq!(s90.column_names()[3], "5%");
    assert_eq!(s90.column_names()[7], "95%");
    assert_eq!(
        s90.rows.iter().map(|r| r.id.as_str()).collect::<Vec<_>>(),
        ["J", "mu", "sigma2", "beta_1"]
    );
    let beta = s95.get("beta_1").unwrap();
    let mut col = draws.columns[3].clone();
    col.sort_by(f64::total_cmp);
    assert_eq!(beta.quantiles[2], quantile(&col, 0.5));
}

#[test]
fn empty_draw_file_is_an_error() {
    assert!(FixedDraws::read_csv("chain,iteration,J,mu\n".as_bytes()).is_err());
}

#[test]
fn splits_file_has_one_row_per_interval() {
    let out = fit();
    let mut buf = Vec::new();
    write_splits_csv(std::slice::from_ref(&out), 200, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let rows = text.lines().count() - 1;
    let intervals: usize = out.draws.iter().map(|d| d.j + 1).sum();
    assert_eq!(rows, intervals);
    assert!(text.starts_with("chain,iteration,interval,lower,upper,lambda,lambda0,tau\n"));
}

#[test]
fn pooled_chains_stack_draws() {
    let (cur, hist) = weibull_scenario(4);
    let config = ChainConfig {
        iter: 300,
        warmup_iter: 100,
        refresh: 0,
        max_grid: 11,
        ..example_config(4)
    };
    let outs = run_chains(&cur, Some(&hist), &config, &example_tuning(), 2).unwrap();
    let pooled = pool_chains(&outs).unwrap();
    assert_eq!(pooled.draws.len(), 600);
    assert_eq!(pooled.draws[300], outs[1].draws[0]);
    assert_eq!(FixedDraws::from_outputs(&outs).len(), 600);
}
