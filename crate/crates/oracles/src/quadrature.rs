use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

/// Adaptive Simpson integration of `f` over `[a, b]` to absolute
/// tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, 60)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

fn log_integrand(z: f64, delta: f64, shape: f64, scale: f64) -> f64 {
    // N(delta; 0, tau) IG(tau; shape, scale) tau with tau = exp(z).
    let tau = z.exp();
    -0.5 * (2.0 * PI * tau).ln() - delta * delta / (2.0 * tau) + shape * scale.ln()
        - ln_gamma(shape)
        - shape * z
        - scale / tau
}

/// `int N(delta; 0, tau) IG(tau; shape, scale) d tau`, integrated over
/// `log tau` relative to the peak of the integrand so the tolerance is
/// relative.
pub fn marginal_by_quadrature(delta: f64, shape: f64, scale: f64) -> f64 {
    let mode = ((scale + 0.5 * delta * delta) / (shape + 0.5)).ln();
    let peak = log_integrand(mode, delta, shape, scale);
    let f = |z: f64| (log_integrand(z, delta, shape, scale) - peak).exp();
    // Left tail decays like exp(-e^{-z}), right tail like exp(-(shape + 1/2) z).
    let (lo, hi) = (mode - 8.0, mode + 80.0 / (shape + 0.5));
    let pieces = 200;
    let width = (hi - lo) / pieces as f64;
    let total: f64 = (0..pieces)
        .map(|k| {
            let a = lo + k as f64 * width;
            adaptive_simpson(&f, a, a + width, 1e-15)
        })
        .sum();
    total * peak.exp()
}

/// Posterior lump weight by quadrature of both mixture components.
pub fn q0_by_quadrature(delta: f64, a: f64, b: f64, c: f64, d: f64, p0: f64) -> f64 {
    let lump = p0 * marginal_by_quadrature(delta, a, b);
    let smear = (1.0 - p0) * marginal_by_quadrature(delta, c, d);
    lump / (lump + smear)
}

/// CDF of the middle order statistic of three uniforms on `(0, end)`
/// (the prior of the single split at `J = 1`), by quadrature of its density.
pub fn single_split_cdf(x: f64, end: f64) -> f64 {
    let density = |s: f64| 6.0 * s * (end - s) / end.powi(3);
    adaptive_simpson(&density, 0.0, x.clamp(0.0, end), 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_integrates_polynomials_and_exponentials() {
        assert!((adaptive_simpson(&|x: f64| x * x, 0.0, 3.0, 1e-12) - 9.0).abs() < 1e-10);
        let e = adaptive_simpson(&|x: f64| (-x).exp(), 0.0, 1.0, 1e-12);
        assert!((e - (1.0 - (-1.0f64).exp())).abs() < 1e-11);
    }

    #[test]
    fn marginal_is_a_density_in_delta() {
        let f = |x: f64| marginal_by_quadrature(x, 2.0, 0.5);
        let total = 2.0 * adaptive_simpson(&f, 0.0, 400.0, 1e-10);
        // Student-t tail beyond 400 with 4 degrees of freedom is below 1e-8.
        assert!((total - 1.0).abs() < 1e-7, "{total}");
    }

    #[test]
    fn split_cdf_endpoints() {
        assert_eq!(single_split_cdf(0.0, 2.0), 0.0);
        assert!((single_split_cdf(2.0, 2.0) - 1.0).abs() < 1e-12);
        assert!((single_split_cdf(1.0, 2.0) - 0.5).abs() < 1e-12);
    }
}
