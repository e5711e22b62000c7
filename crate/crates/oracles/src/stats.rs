use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::gamma::gamma_ur;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Asymptotic Kolmogorov tail probability `P(sqrt(n) D > x)`, with
/// Stephens' small-sample correction applied by the callers.
fn kolmogorov_tail(x: f64) -> f64 {
    if x < 0.2 {
        return 1.0;
    }
    let mut total = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * x * x).exp();
        total += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * total).clamp(0.0, 1.0)
}

fn stephens(d: f64, n: f64) -> f64 {
    kolmogorov_tail((n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d)
}

/// One-sample Kolmogorov-Smirnov test against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> TestResult {
    let mut x = samples.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &v) in x.iter().enumerate() {
        let f = cdf(v);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    TestResult {
        statistic: d,
        p_value: stephens(d, n),
    }
}

/// Two-sample Kolmogorov-Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> TestResult {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    TestResult {
        statistic: d,
        p_value: stephens(d, n * m / (n + m)),
    }
}

/// Pearson goodness-of-fit test of counts against cell probabilities.
pub fn chi_square_gof(observed: &[u64], probabilities: &[f64]) -> TestResult {
    let total: u64 = observed.iter().sum();
    let stat: f64 = observed
        .iter()
        .zip(probabilities)
        .map(|(&o, &p)| {
            let e = p * total as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    let df = (observed.len() - 1) as f64;
    let dist = ChiSquared::new(df).expect("positive degrees of freedom");
    TestResult {
        statistic: stat,
        p_value: 1.0 - dist.cdf(stat),
    }
}

/// Sample mean and unbiased variance.
pub fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Monte Carlo standard error of the mean by non-overlapping batch means.
pub fn batch_means_se(x: &[f64], batches: usize) -> f64 {
    let size = x.len() / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| x[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    (mean_var(&means).1 / batches as f64).sqrt()
}

/// Every `step`-th element.
pub fn thin(x: &[f64], step: usize) -> Vec<f64> {
    x.iter().step_by(step).copied().collect()
}

/// Poisson(`phi`) probabilities truncated to `0..=j_max`, from factorials.
pub fn truncated_poisson_probabilities(phi: f64, j_max: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(j_max + 1);
    let mut term = 1.0;
    for k in 0..=j_max {
        if k > 0 {
            term *= phi / k as f64;
        }
        w.push(term);
    }
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// CDF of the inverse gamma with density proportional to
/// `x^(-shape-1) exp(-scale / x)`.
pub fn inv_gamma_cdf(x: f64, shape: f64, scale: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        gamma_ur(shape, scale / x)
    }
}
