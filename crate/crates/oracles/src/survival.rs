/// Nelson-Aalen cumulative hazard at each distinct event time.
pub fn nelson_aalen(tte: &[f64], event: &[bool]) -> Vec<(f64, f64)> {
    let mut order: Vec<usize> = (0..tte.len()).collect();
    order.sort_by(|&a, &b| tte[a].total_cmp(&tte[b]));
    let mut at_risk = tte.len() as f64;
    let mut h = 0.0;
    let mut out = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let t = tte[order[i]];
        let (mut deaths, mut leaving) = (0.0, 0.0);
        while i < order.len() && tte[order[i]] == t {
            if event[order[i]] {
                deaths += 1.0;
            }
            leaving += 1.0;
            i += 1;
        }
        if deaths > 0.0 {
            h += deaths / at_risk;
            out.push((t, h));
        }
        at_risk -= leaving;
    }
    out
}

/// Step-function lookup in a Nelson-Aalen curve.
pub fn cumulative_at(curve: &[(f64, f64)], t: f64) -> f64 {
    match curve.partition_point(|&(s, _)| s <= t) {
        0 => 0.0,
        k => curve[k - 1].1,
    }
}

/// Occurrence/exposure hazard estimate on `[lo, hi)` with its standard
/// error `sqrt(d) / exposure`.
pub fn interval_hazard(tte: &[f64], event: &[bool], lo: f64, hi: f64) -> (f64, f64) {
    let (mut d, mut exposure) = (0.0, 0.0);
    for (&y, &e) in tte.iter().zip(event) {
        if y > lo {
            exposure += y.min(hi) - lo;
            if e && y < hi {
                d += 1.0;
            }
        }
    }
    (d / exposure, d.sqrt() / exposure)
}
