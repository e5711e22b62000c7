//! The simulate, profile and summarize subcommands.

use std::io::Write;
use std::path::{Path, PathBuf};

use hazborrow::borrowing::{borrowing_profile, BorrowModel, BorrowingProfile, BorrowingSpec};
use hazborrow::data::write_trial_csv;
use hazborrow::posterior::{summarize_fixed, FixedDraws, FixedSummary};
use hazborrow::simulate::{simulate_trial, SimSpec};

use crate::error::CliError;
use crate::fit::{prepare_dir, Emitter, FIXED_DRAWS};

pub const CURRENT_CSV: &str = "current.csv";
pub const HISTORICAL_CSV: &str = "historical.csv";
pub const PROFILE_CSV: &str = "profile.csv";
pub const MARKERS_CSV: &str = "markers.csv";

pub fn load_sim_spec(path: &Path) -> Result<SimSpec, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::validation("config", format!("{}: {e}", path.display())))?;
    toml::from_str(&text)
        .map_err(|e| CliError::validation("config", format!("{}: {e}", path.display())))
}

pub fn simulate(spec: &SimSpec, dir: &Path, force: bool) -> Result<Vec<PathBuf>, CliError> {
    spec.validate()?;
    let (current, historical) = simulate_trial(spec)?;
    prepare_dir(dir, &[CURRENT_CSV, HISTORICAL_CSV], force)?;
    let mut out = Emitter {
        dir,
        files: Vec::new(),
    };
    out.emit(CURRENT_CSV, |w| Ok(write_trial_csv(&current, w)?))?;
    if let Some(h) = &historical {
        out.emit(HISTORICAL_CSV, |w| Ok(write_trial_csv(h, w)?))?;
    }
    Ok(out.files)
}

#[derive(Debug, Clone)]
pub struct ProfileRequest {
    pub spec: BorrowingSpec,
    pub p_0: Vec<f64>,
    pub sse_max: f64,
    pub points: usize,
    /// Intervals entering the sum of squares under `all`.
    pub intervals: usize,
}

pub fn profiles(req: &ProfileRequest) -> Result<Vec<BorrowingProfile>, CliError> {
    if req.spec.model == BorrowModel::Uni || req.spec.model == BorrowModel::None {
        return Err(CliError::validation(
            "invalid_parameter",
            format!(
                "no borrowing profile exists for model_choice `{}`; use mix or all",
                req.spec.model
            ),
        ));
    }
    if req.points < 2 || req.sse_max.is_nan() || req.sse_max <= 0.0 {
        return Err(CliError::validation(
            "invalid_parameter",
            "the SSE grid needs at least two points and a positive upper end",
        ));
    }
    let grid: Vec<f64> = (0..req.points)
        .map(|i| req.sse_max * i as f64 / (req.points - 1) as f64)
        .collect();
    req.p_0
        .iter()
        .map(|&p| {
            let spec = BorrowingSpec { p_0: p, ..req.spec };
            Ok(borrowing_profile(&spec, &grid, req.intervals)?)
        })
        .collect()
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_profiles(
    profiles: &[BorrowingProfile],
    dir: &Path,
    force: bool,
) -> Result<Vec<PathBuf>, CliError> {
    prepare_dir(dir, &[PROFILE_CSV, MARKERS_CSV], force)?;
    let mut out = Emitter {
        dir,
        files: Vec::new(),
    };
    let io = |e: std::io::Error| CliError::runtime("io", e.to_string());
    out.emit(PROFILE_CSV, |w| {
        writeln!(w, "p_0,sse,q0").map_err(io)?;
        for p in profiles {
            for (s, q) in p.sse.iter().zip(&p.q0) {
                writeln!(w, "{},{s},{q}", p.p_0).map_err(io)?;
            }
        }
        Ok(())
    })?;
    out.emit(MARKERS_CSV, |w| {
        writeln!(w, "p_0,xi,xi_squared").map_err(io)?;
        for p in profiles {
            writeln!(w, "{},{},{}", p.p_0, opt(p.xi), opt(p.xi_squared())).map_err(io)?;
        }
        Ok(())
    })?;
    Ok(out.files)
}

/// Estimators understood by `summarize`.
pub const ESTIMATORS: [&str; 1] = ["out_fixed"];

pub fn summarize(path: &Path, estimator: &str, level: f64) -> Result<FixedSummary, CliError> {
    if !ESTIMATORS.contains(&estimator) {
        return Err(CliError::validation(
            "unknown_estimator",
            format!("unknown estimator `{estimator}`; expected one of {ESTIMATORS:?}"),
        ));
    }
    let file = if path.is_dir() {
        path.join(FIXED_DRAWS)
    } else {
        path.to_path_buf()
    };
    let reader = std::fs::File::open(&file)
        .map_err(|e| CliError::validation("missing_file", format!("{}: {e}", file.display())))?;
    let draws = FixedDraws::read_csv(std::io::BufReader::new(reader))?;
    Ok(summarize_fixed(&draws, level)?)
}
