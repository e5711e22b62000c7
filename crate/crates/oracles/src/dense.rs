use std::f64::consts::PI;

/// LU factorisation with partial pivoting of a square row-major matrix.
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
    sign: f64,
}

impl Lu {
    pub fn new(mut a: Vec<f64>, n: usize) -> Option<Self> {
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| a[i * n + k].abs().total_cmp(&a[j * n + k].abs()))?;
            if a[p * n + k] == 0.0 {
                return None;
            }
            if p != k {
                for c in 0..n {
                    a.swap(k * n + c, p * n + c);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            for i in k + 1..n {
                let f = a[i * n + k] / a[k * n + k];
                a[i * n + k] = f;
                for c in k + 1..n {
                    a[i * n + c] -= f * a[k * n + c];
                }
            }
        }
        Some(Self {
            n,
            lu: a,
            perm,
            sign,
        })
    }

    pub fn log_abs_det(&self) -> f64 {
        (0..self.n)
            .map(|i| self.lu[i * self.n + i].abs().ln())
            .sum()
    }

    pub fn det_sign(&self) -> f64 {
        let s: f64 = (0..self.n)
            .map(|i| self.lu[i * self.n + i].signum())
            .product();
        s * self.sign
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                y[i] -= self.lu[i * n + k] * y[k];
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                y[i] -= self.lu[i * n + k] * y[k];
            }
            y[i] /= self.lu[i * n + i];
        }
        y
    }
}

/// `Sigma[i][k] = c^|i-k|`.
pub fn ar1_correlation(c: f64, m: usize) -> Vec<f64> {
    let mut s = vec![0.0; m * m];
    for i in 0..m {
        for k in 0..m {
            s[i * m + k] = c.powi((i as i32 - k as i32).abs());
        }
    }
    s
}

/// Log-density of `N(mu 1, sigma2 Sigma)` through the dense covariance.
pub fn dense_gmrf_log_density(x: &[f64], mu: f64, sigma2: f64, c: f64) -> f64 {
    let m = x.len();
    let cov: Vec<f64> = ar1_correlation(c, m)
        .into_iter()
        .map(|v| v * sigma2)
        .collect();
    let lu = Lu::new(cov, m).expect("AR(1) covariance is nonsingular");
    let r: Vec<f64> = x.iter().map(|v| v - mu).collect();
    let z = lu.solve(&r);
    let quad: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    -0.5 * (m as f64 * (2.0 * PI).ln() + lu.log_abs_det() + quad)
}

/// Full conditional of component `j` from the dense precision.
pub fn dense_conditional(x: &[f64], j: usize, mu: f64, sigma2: f64, c: f64) -> (f64, f64) {
    let m = x.len();
    let precision = inverse(&ar1_correlation(c, m), m);
    let qjj = precision[j * m + j];
    let mut s = 0.0;
    for k in 0..m {
        if k != j {
            s += precision[j * m + k] * (x[k] - mu);
        }
    }
    (mu - s / qjj, sigma2 / qjj)
}

pub fn inverse(a: &[f64], n: usize) -> Vec<f64> {
    let lu = Lu::new(a.to_vec(), n).expect("nonsingular");
    let mut inv = vec![0.0; n * n];
    for c in 0..n {
        let mut e = vec![0.0; n];
        e[c] = 1.0;
        let col = lu.solve(&e);
        for r in 0..n {
            inv[r * n + c] = col[r];
        }
    }
    inv
}
