//! Trial data ingestion, design-matrix coding and input validation.
//!
//! A trial dataset is a set of right-censored subjects: a time-to-event,
//! an event flag and a row of covariates. Covariate columns are the CSV
//! columns whose header starts with `X`, in file order.
//!
//! Borrowing acts on the control baseline hazard, so every covariate except
//! the treatment indicator should be coded relative to the marginal control
//! group: discrete covariates with [`encode_sum_to_zero`] and continuous ones
//! centred, preferably with [`standardize`].

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// Prefix that marks a covariate column.
pub const COVARIATE_PREFIX: &str = "X";

/// Dense row-major design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl Design {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    what: "design row",
                    expected: cols,
                    found: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            values,
        })
    }

    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Result<Self> {
        for column in columns {
            if column.len() != rows {
                return Err(Error::DimensionMismatch {
                    what: "design column",
                    expected: rows,
                    found: column.len(),
                });
            }
        }
        let cols = columns.len();
        let mut values = vec![0.0; rows * cols];
        for (k, column) in columns.iter().enumerate() {
            for (i, &v) in column.iter().enumerate() {
                values[i * cols + k] = v;
            }
        }
        Ok(Self { rows, cols, values })
    }

    /// An `rows × 0` design, for data without covariates.
    pub fn empty(rows: usize) -> Self {
        Self {
            rows,
            cols: 0,
            values: Vec::new(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.values[i * self.cols + k]
    }

    pub fn column(&self, k: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.rows).map(move |i| self.get(i, k))
    }

    /// Linear predictor `x_i' beta` for every row.
    pub fn linear_predictor(&self, beta: &[f64]) -> Vec<f64> {
        debug_assert_eq!(beta.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(beta).map(|(x, b)| x * b).sum())
            .collect()
    }

    fn without_column(&self, drop: usize) -> Self {
        let columns: Vec<Vec<f64>> = (0..self.cols)
            .filter(|&k| k != drop)
            .map(|k| self.column(k).collect())
            .collect();
        Self::from_columns(self.rows, &columns).expect("columns share the row count")
    }
}

/// One arm-structured dataset: current or historical.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialData {
    tte: Vec<f64>,
    event: Vec<bool>,
    design: Design,
    column_names: Vec<String>,
    treatment: Option<usize>,
}

impl TrialData {
    /// Builds a dataset, checking every invariant. `treatment` indexes the
    /// treatment indicator column when the data carries one.
    pub fn new(
        tte: Vec<f64>,
        event: Vec<bool>,
        design: Design,
        column_names: Vec<String>,
        treatment: Option<usize>,
    ) -> Result<Self> {
        let n = tte.len();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        if event.len() != n {
            return Err(Error::DimensionMismatch {
                what: "event indicators",
                expected: n,
                found: event.len(),
            });
        }
        if design.rows() != n {
            return Err(Error::DimensionMismatch {
                what: "design rows",
                expected: n,
                found: design.rows(),
            });
        }
        if column_names.len() != design.cols() {
            return Err(Error::DimensionMismatch {
                what: "column names",
                expected: design.cols(),
                found: column_names.len(),
            });
        }
        for (row, &t) in tte.iter().enumerate() {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::NonPositiveTime { row, value: t });
            }
        }
        for (row, x) in design.values.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::NonFinite {
                    what: format!("design entry {row}"),
                });
            }
        }
        if !event.iter().any(|&e| e) {
            return Err(Error::NoEvents);
        }
        if let Some(k) = treatment {
            if k >= design.cols() {
                return Err(Error::DimensionMismatch {
                    what: "treatment column index",
                    expected: design.cols(),
                    found: k,
                });
            }
            if design.column(k).any(|v| v != 0.0 && v != 1.0) {
                return Err(Error::InvalidTreatment {
                    column: column_names[k].clone(),
                    reason: "values must be 0 or 1".into(),
                });
            }
        }
        Ok(Self {
            tte,
            event,
            design,
            column_names,
            treatment,
        })
    }

    /// Dataset with times and events only.
    pub fn without_covariates(tte: Vec<f64>, event: Vec<bool>) -> Result<Self> {
        let n = tte.len();
        Self::new(tte, event, Design::empty(n), Vec::new(), None)
    }

    pub fn n(&self) -> usize {
        self.tte.len()
    }

    pub fn tte(&self) -> &[f64] {
        &self.tte
    }

    pub fn event(&self) -> &[bool] {
        &self.event
    }

    pub fn design(&self) -> &Design {
        &self.design
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn p(&self) -> usize {
        self.design.cols()
    }

    pub fn treatment(&self) -> Option<usize> {
        self.treatment
    }

    pub fn treatment_name(&self) -> Option<&str> {
        self.treatment.map(|k| self.column_names[k].as_str())
    }

    pub fn event_count(&self) -> usize {
        self.event.iter().filter(|&&e| e).count()
    }

    pub fn max_follow_up(&self) -> f64 {
        self.tte.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_event_time(&self) -> f64 {
        self.tte
            .iter()
            .zip(&self.event)
            .filter(|(_, &e)| e)
            .map(|(&t, _)| t)
            .fold(0.0, f64::max)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    /// Copy of the dataset with one covariate column removed.
    pub fn without_column(&self, name: &str) -> Result<Self> {
        let k = self
            .column_index(name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
        let mut names = self.column_names.clone();
        names.remove(k);
        let treatment = match self.treatment {
            Some(t) if t == k => None,
            Some(t) if t > k => Some(t - 1),
            other => other,
        };
        Self::new(
            self.tte.clone(),
            self.event.clone(),
            self.design.without_column(k),
            names,
            treatment,
        )
    }

    /// Historical control data for the sampler: the treatment column, when
    /// present, must be all zeros and is dropped.
    pub fn into_historical(self, treatment_name: &str) -> Result<Self> {
        match self.column_index(treatment_name) {
            None => Ok(Self {
                treatment: None,
                ..self
            }),
            Some(k) => {
                if self.design.column(k).any(|v| v != 0.0) {
                    return Err(Error::InvalidTreatment {
                        column: treatment_name.to_string(),
                        reason: "historical data must be control-only (all zeros)".into(),
                    });
                }
                self.without_column(treatment_name)
            }
        }
    }
}

/// Column naming of a trial CSV.
#[derive(Debug, Clone)]
pub struct CsvSchema {
    pub time_col: String,
    pub event_col: String,
    /// Treatment column; the first covariate column when `None`.
    pub treatment_col: Option<String>,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            time_col: "tte".into(),
            event_col: "event".into(),
            treatment_col: None,
        }
    }
}

impl CsvSchema {
    pub fn new(time_col: &str, event_col: &str) -> Self {
        Self {
            time_col: time_col.into(),
            event_col: event_col.into(),
            treatment_col: None,
        }
    }
}

/// Which role a loaded dataset plays.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arm {
    Current,
    /// Historical control; a treatment column is optional and dropped.
    Historical,
}

/// Loads the current trial CSV.
pub fn load_trial_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<TrialData> {
    let file = std::fs::File::open(path)?;
    read_trial_csv(file, schema, Arm::Current)
}

/// Loads a historical control CSV. `treatment_name` is the current trial's
/// treatment column.
pub fn load_historical_csv(
    path: impl AsRef<Path>,
    schema: &CsvSchema,
    treatment_name: &str,
) -> Result<TrialData> {
    let file = std::fs::File::open(path)?;
    let schema = CsvSchema {
        treatment_col: Some(treatment_name.to_string()),
        ..schema.clone()
    };
    read_trial_csv(file, &schema, Arm::Historical)
}

pub fn read_trial_csv<R: Read>(reader: R, schema: &CsvSchema, arm: Arm) -> Result<TrialData> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let time_idx = find(&schema.time_col)?;
    let event_idx = find(&schema.event_col)?;
    let cov_idx: Vec<usize> = headers
        .iter()
        .enumerate()
        .filter(|(i, h)| *i != time_idx && *i != event_idx && h.starts_with(COVARIATE_PREFIX))
        .map(|(i, _)| i)
        .collect();
    let names: Vec<String> = cov_idx.iter().map(|&i| headers[i].clone()).collect();

    let mut tte = Vec::new();
    let mut event = Vec::new();
    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        // 1-based data row, header excluded.
        let row = i + 1;
        let parse = |idx: usize| -> Result<f64> {
            let raw = record.get(idx).unwrap_or("");
            raw.parse::<f64>().map_err(|_| Error::NonNumeric {
                column: headers[idx].clone(),
                row,
                value: raw.to_string(),
            })
        };
        let t = parse(time_idx)?;
        if !(t > 0.0) {
            return Err(Error::NonPositiveTime { row, value: t });
        }
        let e = parse(event_idx)?;
        let flag = if e == 0.0 {
            false
        } else if e == 1.0 {
            true
        } else {
            return Err(Error::InvalidEvent { row, value: e });
        };
        tte.push(t);
        event.push(flag);
        rows.push(
            cov_idx
                .iter()
                .map(|&i| parse(i))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    if tte.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let design = if names.is_empty() {
        Design::empty(tte.len())
    } else {
        Design::from_rows(&rows)?
    };

    match arm {
        Arm::Current => {
            let treatment = match &schema.treatment_col {
                Some(name) => Some(
                    names
                        .iter()
                        .position(|c| c == name)
                        .ok_or_else(|| Error::MissingColumn(name.clone()))?,
                ),
                None if names.is_empty() => {
                    return Err(Error::MissingColumn(format!(
                        "{COVARIATE_PREFIX}* treatment indicator"
                    )))
                }
                None => Some(0),
            };
            TrialData::new(tte, event, design, names, treatment)
        }
        Arm::Historical => {
            let data = TrialData::new(tte, event, design, names, None)?;
            match &schema.treatment_col {
                Some(name) => data.into_historical(name),
                None => Ok(data),
            }
        }
    }
}

/// Writes `tte,event,X...` with shortest round-trip float formatting.
pub fn write_trial_csv<W: Write>(data: &TrialData, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["tte".to_string(), "event".to_string()];
    header.extend(data.column_names.iter().cloned());
    wtr.write_record(&header)?;
    for i in 0..data.n() {
        let mut record = vec![data.tte[i].to_string(), u8::from(data.event[i]).to_string()];
        record.extend(data.design.row(i).iter().map(f64::to_string));
        wtr.write_record(&record)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn save_trial_csv(data: &TrialData, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_trial_csv(data, std::io::BufWriter::new(file))
}

/// How a single raw covariate is turned into design columns.
#[derive(Debug, Clone, PartialEq)]
pub enum CovariateCoding {
    /// 0/1 indicator relative to a reference group; used for treatment only.
    TreatmentReference,
    /// `levels` discrete levels in `levels - 1` columns summing to zero.
    SumToZero {
        levels: usize,
    },
    StandardizedContinuous {
        mean: f64,
        sd: f64,
    },
}

impl CovariateCoding {
    pub fn columns(&self) -> usize {
        match self {
            CovariateCoding::SumToZero { levels } => levels - 1,
            _ => 1,
        }
    }
}

/// Sum-to-zero coding: level `i < k` maps to the unit row `e_i`, the last
/// level to the all `-1` row.
pub fn encode_sum_to_zero<S: AsRef<str>, L: AsRef<str>>(
    values: &[S],
    level_order: &[L],
) -> Result<Design> {
    let k = level_order.len();
    if k < 2 {
        return Err(Error::TooFewLevels(k));
    }
    let index: HashMap<&str, usize> = level_order
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_ref(), i))
        .collect();
    let mut rows = Vec::with_capacity(values.len());
    for v in values {
        let level = *index
            .get(v.as_ref())
            .ok_or_else(|| Error::UnknownLevel(v.as_ref().to_string()))?;
        let row = if level == k - 1 {
            vec![-1.0; k - 1]
        } else {
            let mut row = vec![0.0; k - 1];
            row[level] = 1.0;
            row
        };
        rows.push(row);
    }
    if rows.is_empty() {
        return Ok(Design {
            rows: 0,
            cols: k - 1,
            values: Vec::new(),
        });
    }
    Design::from_rows(&rows)
}

/// Centring and scaling of one continuous covariate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Standardizer {
    pub mean: f64,
    pub sd: f64,
}

impl Standardizer {
    /// Sample mean and sample standard deviation (`n - 1` denominator).
    pub fn fit(values: &[f64]) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::param("values", "need at least two values"));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let sd = var.sqrt();
        if !(sd > 0.0) {
            return Err(Error::ConstantColumn);
        }
        Ok(Self { mean, sd })
    }

    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|x| (x - self.mean) / self.sd).collect()
    }

    pub fn coding(&self) -> CovariateCoding {
        CovariateCoding::StandardizedContinuous {
            mean: self.mean,
            sd: self.sd,
        }
    }
}

/// Standardizes `values`, returning the transformed vector with the
/// mean and sd used.
pub fn standardize(values: &[f64]) -> Result<(Vec<f64>, Standardizer)> {
    let s = Standardizer::fit(values)?;
    Ok((s.apply(values), s))
}

/// Whether current and historical continuous covariates share one transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StandardizeMode {
    /// Mean and sd estimated on the concatenation of both datasets.
    #[default]
    Pooled,
    Separate,
}

/// Standardizes a continuous covariate observed in both datasets.
pub fn standardize_pair(
    current: &[f64],
    historical: &[f64],
    mode: StandardizeMode,
) -> Result<(Vec<f64>, Vec<f64>)> {
    match mode {
        StandardizeMode::Pooled => {
            let pooled: Vec<f64> = current.iter().chain(historical).copied().collect();
            let s = Standardizer::fit(&pooled)?;
            Ok((s.apply(current), s.apply(historical)))
        }
        StandardizeMode::Separate => Ok((standardize(current)?.0, standardize(historical)?.0)),
    }
}

/// Summary of a validated current/historical pair.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub status: &'static str,
    pub treatment: Option<String>,
    pub covariates: Vec<String>,
    pub current: DatasetSummary,
    pub historical: Option<DatasetSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DatasetSummary {
    pub n: usize,
    pub events: usize,
    pub max_follow_up: f64,
    pub max_event_time: f64,
}

impl DatasetSummary {
    fn of(data: &TrialData) -> Self {
        Self {
            n: data.n(),
            events: data.event_count(),
            max_follow_up: data.max_follow_up(),
            max_event_time: data.max_event_time(),
        }
    }
}

/// Checks that a historical dataset lines up with the current one. The
/// historical covariates must equal the current ones, except that the
/// treatment column may be absent (or all zeros).
pub fn validate_pair(current: &TrialData, historical: &TrialData) -> Result<ValidationReport> {
    if current.n() == 0 || historical.n() == 0 {
        return Err(Error::EmptyDataset);
    }
    let treatment = current.treatment_name().map(str::to_string);
    let strip = |names: &[String]| -> Vec<String> {
        names
            .iter()
            .filter(|c| Some(c.as_str()) != treatment.as_deref())
            .cloned()
            .collect()
    };
    let current_cov = strip(current.column_names());
    let hist_cov = strip(historical.column_names());
    if current_cov != hist_cov {
        return Err(Error::CovariateMismatch {
            current: current_cov,
            historical: hist_cov,
        });
    }
    if let Some(name) = &treatment {
        if let Some(k) = historical.column_index(name) {
            if historical.design().column(k).any(|v| v != 0.0) {
                return Err(Error::InvalidTreatment {
                    column: name.clone(),
                    reason: "historical data must be control-only (all zeros)".into(),
                });
            }
        }
    }
    Ok(ValidationReport {
        status: "Inputs look ok",
        treatment,
        covariates: current.column_names().to_vec(),
        current: DatasetSummary::of(current),
        historical: Some(DatasetSummary::of(historical)),
    })
}

/// Report for a single dataset run without borrowing.
pub fn validate_single(current: &TrialData) -> ValidationReport {
    ValidationReport {
        status: "Inputs look ok",
        treatment: current.treatment_name().map(str::to_string),
        covariates: current.column_names().to_vec(),
        current: DatasetSummary::of(current),
        historical: None,
    }
}
