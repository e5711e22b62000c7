/// Log of the piecewise exponential likelihood written as a product over
/// subjects and intervals, `splits` running from 0 to the endpoint.
/// Follow-up past the endpoint is truncated and events past it ignored.
pub fn direct_log_likelihood(
    tte: &[f64],
    event: &[bool],
    covariates: &[Vec<f64>],
    beta: &[f64],
    splits: &[f64],
    lambdas: &[f64],
) -> f64 {
    let end = *splits.last().unwrap();
    let mut total = 0.0;
    for i in 0..tte.len() {
        let eta: f64 = covariates
            .get(i)
            .map_or(0.0, |x| x.iter().zip(beta).map(|(a, b)| a * b).sum());
        let risk = eta.exp();
        let mut factor = 1.0;
        for j in 0..lambdas.len() {
            let (lo, hi) = (splits[j], splits[j + 1]);
            let inside = tte[i] > lo && tte[i] <= hi;
            let delta = if event[i] && tte[i] <= end && inside {
                1.0
            } else {
                0.0
            };
            let time_in = (tte[i].min(hi) - lo).max(0.0);
            factor *= (lambdas[j] * risk).powf(delta) * (-lambdas[j] * time_in * risk).exp();
        }
        total += factor.ln();
    }
    total
}

/// Maximum likelihood log hazard ratio of an exponential model with one
/// binary covariate: `log((d1 / T1) / (d0 / T0))`.
pub fn exponential_log_hazard_ratio(tte: &[f64], event: &[bool], group: &[bool]) -> f64 {
    let (mut d, mut t) = ([0.0f64; 2], [0.0f64; 2]);
    for ((&y, &e), &g) in tte.iter().zip(event).zip(group) {
        let k = usize::from(g);
        t[k] += y;
        if e {
            d[k] += 1.0;
        }
    }
    ((d[1] / t[1]) / (d[0] / t[0])).ln()
}
