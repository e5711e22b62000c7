//! Posterior summaries computed from stored draws.
//!
//! Curves are evaluated on the chain's time grid one grid point at a time,
//! so memory stays linear in the number of draws. Each grid time takes the
//! hazard of the interval `[s_j, s_{j+1})` that contains it, with the
//! endpoint assigned to the last interval. Bands are equal-tailed pointwise
//! empirical quantiles.

use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{cumulative_hazard, TimePartition};
use crate::sampler::{ChainOutput, Draw};

/// Sample quantile with linear interpolation between order statistics
/// (`sorted` ascending, `p` in `[0, 1]`).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::param("level", "must lie in (0, 1)"))
    }
}

/// Pointwise posterior mean and equal-tailed band of a function of time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Curve {
    pub time: Vec<f64>,
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub median: Vec<f64>,
    pub upper: Vec<f64>,
    pub level: f64,
}

impl Curve {
    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    /// Writes `time,mean,lower,upper`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["time", "mean", "lower", "upper"])?;
        for i in 0..self.len() {
            w.write_record([
                self.time[i].to_string(),
                self.mean[i].to_string(),
                self.lower[i].to_string(),
                self.upper[i].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Sum of absolute increments along a curve.
pub fn total_variation(values: &[f64]) -> f64 {
    values.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

fn band_curve<F>(output: &ChainOutput, level: f64, mut value: F) -> Result<Curve>
where
    F: FnMut(usize, &Draw, f64) -> f64,
{
    check_level(level)?;
    if output.draws.is_empty() {
        return Err(Error::NoDraws);
    }
    let tail = (1.0 - level) / 2.0;
    let n = output.time_grid.len();
    let mut curve = Curve {
        time: output.time_grid.clone(),
        mean: Vec::with_capacity(n),
        lower: Vec::with_capacity(n),
        median: Vec::with_capacity(n),
        upper: Vec::with_capacity(n),
        level,
    };
    let mut column = vec![0.0; output.draws.len()];
    for &t in &output.time_grid {
        for (i, (slot, draw)) in column.iter_mut().zip(&output.draws).enumerate() {
            *slot = value(i, draw, t);
        }
        curve
            .mean
            .push(column.iter().sum::<f64>() / column.len() as f64);
        column.sort_by(f64::total_cmp);
        curve.lower.push(quantile(&column, tail));
        curve.median.push(quantile(&column, 0.5));
        curve.upper.push(quantile(&column, 1.0 - tail));
    }
    Ok(curve)
}

fn grid_interval(splits: &[f64], t: f64) -> usize {
    let m = splits.len() - 1;
    splits[1..].partition_point(|&s| s <= t).min(m - 1)
}

fn linear_predictor(beta: &[f64], x: &[f64]) -> f64 {
    beta.iter().zip(x).map(|(b, x)| b * x).sum()
}

fn check_x(output: &ChainOutput, x: &[f64]) -> Result<()> {
    if x.len() != output.beta_names.len() {
        return Err(Error::DimensionMismatch {
            what: "covariate vector",
            expected: output.beta_names.len(),
            found: x.len(),
        });
    }
    Ok(())
}

/// Ensemble-averaged baseline hazard of the current data.
pub fn smooth_hazard(output: &ChainOutput, level: f64) -> Result<Curve> {
    band_curve(output, level, |_, d, t| {
        d.lambda[grid_interval(&d.splits, t)]
    })
}

/// Same for the historical baseline; requires a borrowing fit.
pub fn smooth_hazard_historical(output: &ChainOutput, level: f64) -> Result<Curve> {
    if !output.borrow {
        return Err(Error::param(
            "borrow",
            "no historical hazard without borrowing",
        ));
    }
    band_curve(output, level, |_, d, t| {
        d.lambda0.as_ref().expect("borrowing draws carry lambda0")[grid_interval(&d.splits, t)]
    })
}

/// Posterior predictive hazard `lambda(t) exp(x' beta)`.
pub fn predictive_hazard(output: &ChainOutput, x: &[f64], level: f64) -> Result<Curve> {
    check_x(output, x)?;
    band_curve(output, level, |_, d, t| {
        d.lambda[grid_interval(&d.splits, t)] * linear_predictor(&d.beta, x).exp()
    })
}

/// Posterior predictive survival `exp(-H(t) exp(x' beta))`.
pub fn predictive_survival(output: &ChainOutput, x: &[f64], level: f64) -> Result<Curve> {
    check_x(output, x)?;
    let partitions: Vec<TimePartition> = output
        .draws
        .iter()
        .map(|d| TimePartition::new(d.splits.clone()))
        .collect::<Result<_>>()?;
    let risks: Vec<f64> = output
        .draws
        .iter()
        .map(|d| linear_predictor(&d.beta, x).exp())
        .collect();
    band_curve(output, level, |i, d, t| {
        (-cumulative_hazard(t, &partitions[i], &d.lambda) * risks[i]).exp()
    })
}

/// Draws of the hazard ratio `exp(x' beta)` with their summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HazardRatioDensity {
    pub samples: Vec<f64>,
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
}

pub fn hazard_ratio_density(
    output: &ChainOutput,
    x: &[f64],
    level: f64,
) -> Result<HazardRatioDensity> {
    check_x(output, x)?;
    check_level(level)?;
    if output.draws.is_empty() {
        return Err(Error::NoDraws);
    }
    let samples: Vec<f64> = output
        .draws
        .iter()
        .map(|d| linear_predictor(&d.beta, x).exp())
        .collect();
    let mut sorted = samples.clone();
    sorted.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Ok(HazardRatioDensity {
        mean: samples.iter().sum::<f64>() / samples.len() as f64,
        lower: quantile(&sorted, tail),
        upper: quantile(&sorted, 1.0 - tail),
        samples,
        level,
    })
}

/// Draws of the parameters whose dimension does not change, one column per
/// parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedDraws {
    pub ids: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl FixedDraws {
    pub fn from_output(output: &ChainOutput) -> Self {
        Self::from_outputs(std::slice::from_ref(output))
    }

    /// Stacks chains in order.
    pub fn from_outputs(outputs: &[ChainOutput]) -> Self {
        let first = outputs.first();
        let p = first.map_or(0, |o| o.beta_names.len());
        let p0 = first.map_or(0, |o| o.beta0_names.len());
        let mut ids: Vec<String> = ["J", "mu", "sigma2"].map(String::from).to_vec();
        ids.extend((1..=p).map(|k| format!("beta_{k}")));
        ids.extend((1..=p0).map(|k| format!("beta_0_{k}")));
        let mut columns = vec![Vec::new(); ids.len()];
        for d in outputs.iter().flat_map(|o| &o.draws) {
            columns[0].push(d.j as f64);
            columns[1].push(d.mu);
            columns[2].push(d.sigma2);
            for (k, b) in d.beta.iter().chain(&d.beta0).enumerate() {
                columns[3 + k].push(*b);
            }
        }
        Self { ids, columns }
    }

    pub fn len(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Writes one row per draw, prefixed by chain and iteration.
    pub fn write_csv<W: Write>(&self, writer: W, chain_of_row: &[(u64, usize)]) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["chain".to_string(), "iteration".to_string()];
        header.extend(self.ids.iter().cloned());
        w.write_record(&header)?;
        for (i, &(chain, iteration)) in chain_of_row.iter().enumerate().take(self.len()) {
            let mut row = vec![chain.to_string(), iteration.to_string()];
            row.extend(self.columns.iter().map(|c| c[i].to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a file written by [`FixedDraws::write_csv`].
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        let keep: Vec<usize> = headers
            .iter()
            .enumerate()
            .filter(|(_, h)| *h != "chain" && *h != "iteration")
            .map(|(i, _)| i)
            .collect();
        let ids: Vec<String> = keep.iter().map(|&i| headers[i].to_string()).collect();
        let mut columns = vec![Vec::new(); ids.len()];
        for (row, record) in r.records().enumerate() {
            let record = record?;
            for (c, &i) in keep.iter().enumerate() {
                let raw = &record[i];
                let v = raw.parse::<f64>().map_err(|_| Error::NonNumeric {
                    column: ids[c].clone(),
                    row: row + 1,
                    value: raw.to_string(),
                })?;
                columns[c].push(v);
            }
        }
        let draws = Self { ids, columns };
        if draws.is_empty() {
            return Err(Error::NoDraws);
        }
        Ok(draws)
    }
}

/// `(chain, iteration)` labels matching [`FixedDraws::from_outputs`].
pub fn draw_labels(outputs: &[ChainOutput], warmup: usize) -> Vec<(u64, usize)> {
    outputs
        .iter()
        .flat_map(|o| (0..o.draws.len()).map(move |i| (o.chain, warmup + i + 1)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub id: String,
    pub mean: f64,
    pub sd: f64,
    /// Lower tail, 25%, 50%, 75% and upper tail.
    pub quantiles: [f64; 5],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedSummary {
    pub level: f64,
    pub rows: Vec<SummaryRow>,
}

fn percent_label(p: f64) -> String {
    let v = (p * 1000.0).round() / 10.0;
    format!("{v}%")
}

impl FixedSummary {
    pub fn column_names(&self) -> [String; 8] {
        let tail = (1.0 - self.level) / 2.0;
        [
            "id".into(),
            "Mean".into(),
            "sd".into(),
            percent_label(tail),
            "25%".into(),
            "50%".into(),
            "75%".into(),
            percent_label(1.0 - tail),
        ]
    }

    pub fn get(&self, id: &str) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.id == id)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.column_names())?;
        for r in &self.rows {
            let mut rec = vec![r.id.clone(), r.mean.to_string(), r.sd.to_string()];
            rec.extend(r.quantiles.iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Fixed-width table with three significant digits.
    pub fn to_text(&self) -> String {
        let names = self.column_names();
        let cells: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                let mut row = vec![r.id.clone(), sig3(r.mean), sig3(r.sd)];
                row.extend(r.quantiles.iter().map(|&q| sig3(q)));
                row
            })
            .collect();
        let widths: Vec<usize> = (0..names.len())
            .map(|c| {
                cells
                    .iter()
                    .map(|row| row[c].len())
                    .chain([names[c].len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let mut out = String::new();
        let line = |cols: &[String], out: &mut String| {
            let parts: Vec<String> = cols
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(c, (v, w))| {
                    if c == 0 {
                        format!("{v:<w$}")
                    } else {
                        format!("{v:>w$}")
                    }
                })
                .collect();
            out.push_str(parts.join(" ").trim_end());
            out.push('\n');
        };
        line(&names, &mut out);
        for row in &cells {
            line(row, &mut out);
        }
        out
    }
}

fn sig3(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (2 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Mean, standard deviation and quantiles of every fixed-dimension
/// parameter.
pub fn summarize_fixed(draws: &FixedDraws, level: f64) -> Result<FixedSummary> {
    check_level(level)?;
    if draws.is_empty() {
        return Err(Error::NoDraws);
    }
    let tail = (1.0 - level) / 2.0;
    let rows = draws
        .ids
        .iter()
        .zip(&draws.columns)
        .map(|(id, values)| {
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let sd = if values.len() > 1 {
                (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            let mut sorted = values.clone();
            sorted.sort_by(f64::total_cmp);
            let quantiles = [tail, 0.25, 0.5, 0.75, 1.0 - tail].map(|p| quantile(&sorted, p));
            SummaryRow {
                id: id.clone(),
                mean,
                sd,
                quantiles,
            }
        })
        .collect();
    Ok(FixedSummary { level, rows })
}

/// Writes the per-interval draws in long form:
/// `chain,iteration,interval,lower,upper,lambda,lambda0,tau`.
pub fn write_splits_csv<W: Write>(outputs: &[ChainOutput], warmup: usize, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "chain",
        "iteration",
        "interval",
        "lower",
        "upper",
        "lambda",
        "lambda0",
        "tau",
    ])?;
    for o in outputs {
        for (i, d) in o.draws.iter().enumerate() {
            for j in 0..d.lambda.len() {
                let lambda0 = d
                    .lambda0
                    .as_ref()
                    .map_or(String::new(), |l| l[j].to_string());
                let tau = match d.tau.len() {
                    0 => String::new(),
                    1 => d.tau[0].to_string(),
                    _ => d.tau[j].to_string(),
                };
                w.write_record([
                    o.chain.to_string(),
                    (warmup + i + 1).to_string(),
                    (j + 1).to_string(),
                    d.splits[j].to_string(),
                    d.splits[j + 1].to_string(),
                    d.lambda[j].to_string(),
                    lambda0,
                    tau,
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Concatenates the draws of several chains fitted with the same
/// configuration.
pub fn pool_chains(outputs: &[ChainOutput]) -> Result<ChainOutput> {
    let first = outputs.first().ok_or(Error::NoDraws)?;
    let mut pooled = first.clone();
    for o in &outputs[1..] {
        if o.time_grid != first.time_grid || o.beta_names != first.beta_names {
            return Err(Error::param(
                "chains",
                "chains differ in grid or covariates",
            ));
        }
        pooled.draws.extend(o.draws.iter().cloned());
    }
    Ok(pooled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::borrowing::BorrowModel;
    use crate::sampler::Acceptance;

    fn output(draws: Vec<Draw>, end: f64, grid: usize) -> ChainOutput {
        ChainOutput {
            time_grid: (0..grid)
                .map(|i| end * i as f64 / (grid - 1) as f64)
                .collect(),
            end,
            draws,
            acceptance: Acceptance::default(),
            beta_names: vec!["X1".into()],
            beta0_names: Vec::new(),
            borrow: false,
            model: BorrowModel::None,
            seed: 1,
            chain: 0,
        }
    }

    fn flat(lambda: f64, beta: f64, end: f64) -> Draw {
        Draw {
            j: 0,
            mu: lambda.ln(),
            sigma2: 1.0,
            beta: vec![beta],
            beta0: Vec::new(),
            splits: vec![0.0, end],
            lambda: vec![lambda],
            lambda0: None,
            tau: Vec::new(),
        }
    }

    #[test]
    fn type7_quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert!((quantile(&v, 0.25) - 1.75).abs() < 1e-15);
        assert!((quantile(&v, 0.5) - 2.5).abs() < 1e-15);
    }

    #[test]
    fn single_flat_draw_gives_a_flat_curve() {
        let out = output(vec![flat(0.7, 0.0, 2.0)], 2.0, 11);
        let c = smooth_hazard(&out, 0.95).unwrap();
        assert!(c
            .mean
            .iter()
            .chain(&c.lower)
            .chain(&c.upper)
            .all(|&v| v == 0.7));
    }

    #[test]
    fn two_draws_average_and_two_point_bands() {
        let out = output(vec![flat(1.0, 0.0, 1.0), flat(3.0, 0.0, 1.0)], 1.0, 5);
        let c = smooth_hazard(&out, 0.95).unwrap();
        for i in 0..c.len() {
            assert_eq!(c.mean[i], 2.0);
            assert!((c.lower[i] - 1.05).abs() < 1e-12);
            assert!((c.upper[i] - 2.95).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_uses_half_open_intervals() {
        let d = Draw {
            splits: vec![0.0, 1.0, 2.0],
            lambda: vec![1.0, 5.0],
            j: 1,
            ..flat(1.0, 0.0, 2.0)
        };
        let out = output(vec![d], 2.0, 3);
        let c = smooth_hazard(&out, 0.95).unwrap();
        assert_eq!(c.mean, vec![1.0, 5.0, 5.0]);
    }

    #[test]
    fn predictive_curves_scale_with_the_hazard_ratio() {
        let out = output(vec![flat(1.0, 0.4, 3.0)], 3.0, 7);
        let base = smooth_hazard(&out, 0.95).unwrap();
        let zero = predictive_hazard(&out, &[0.0], 0.95).unwrap();
        assert_eq!(base, zero);
        let treated = predictive_hazard(&out, &[1.0], 0.95).unwrap();
        assert!((treated.mean[3] - 0.4f64.exp()).abs() < 1e-12);
        let surv = predictive_survival(&out, &[0.0], 0.95).unwrap();
        assert_eq!(surv.mean[0], 1.0);
        for (t, s) in surv.time.iter().zip(&surv.mean) {
            assert!((s - (-t).exp()).abs() < 1e-12);
        }
        assert!(predictive_hazard(&out, &[1.0, 2.0], 0.95).is_err());
    }

    #[test]
    fn hazard_ratio_point_mass() {
        let out = output(vec![flat(1.0, -0.5, 1.0); 4], 1.0, 2);
        let hr = hazard_ratio_density(&out, &[1.0], 0.95).unwrap();
        assert!(hr.samples.iter().all(|&s| s == (-0.5f64).exp()));
        let unit = hazard_ratio_density(&out, &[0.0], 0.95).unwrap();
        assert!(unit.samples.iter().all(|&s| s == 1.0));
    }

    #[test]
    fn constant_draws_summarise_to_zero_spread() {
        let out = output(vec![flat(2.0, 0.3, 1.0); 5], 1.0, 2);
        let s = summarize_fixed(&FixedDraws::from_output(&out), 0.95).unwrap();
        let ids: Vec<&str> = s.rows.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["J", "mu", "sigma2", "beta_1"]);
        let b = s.get("beta_1").unwrap();
        assert_eq!(b.sd, 0.0);
        assert!(b.quantiles.iter().all(|&q| q == 0.3));
    }

    #[test]
    fn level_changes_tail_labels() {
        let out = output(vec![flat(2.0, 0.3, 1.0); 3], 1.0, 2);
        let draws = FixedDraws::from_output(&out);
        let s = summarize_fixed(&draws, 0.9).unwrap();
        assert_eq!(s.column_names()[3], "5%");
        assert_eq!(s.column_names()[7], "95%");
        let s = summarize_fixed(&draws, 0.95).unwrap();
        assert_eq!(s.column_names()[3], "2.5%");
    }

    #[test]
    fn fixed_draws_round_trip() {
        let out = output(vec![flat(2.0, 0.3, 1.0), flat(1.5, -0.1, 1.0)], 1.0, 2);
        let draws = FixedDraws::from_output(&out);
        let mut buf = Vec::new();
        draws
            .write_csv(&mut buf, &draw_labels(std::slice::from_ref(&out), 10))
            .unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("chain,iteration,J,mu,sigma2,beta_1\n0,11,"));
        assert_eq!(FixedDraws::read_csv(buf.as_slice()).unwrap(), draws);
        assert!(matches!(
            FixedDraws::read_csv("chain,iteration,J\n".as_bytes()),
            Err(Error::NoDraws)
        ));
    }

    #[test]
    fn empty_output_is_an_error() {
        let out = output(Vec::new(), 1.0, 2);
        assert!(matches!(smooth_hazard(&out, 0.95), Err(Error::NoDraws)));
    }
}
