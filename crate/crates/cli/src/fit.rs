use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use hazborrow::borrowing::BorrowModel;
use hazborrow::data::{
    load_historical_csv, load_trial_csv, validate_pair, validate_single, CsvSchema, TrialData,
    ValidationReport,
};
use hazborrow::posterior::{
    draw_labels, pool_chains, predictive_hazard, predictive_survival, smooth_hazard_historical,
    summarize_fixed, write_splits_csv, FixedDraws, FixedSummary,
};
use hazborrow::sampler::{acceptance_line, run_chain_observed, run_chains, ChainOutput};
use serde_json::json;

use crate::config::RunConfig;
use crate::error::CliError;

pub const FIXED_DRAWS: &str = "fixed_draws.csv";
pub const SPLITS: &str = "splits.csv";
pub const HAZARD_TREATMENT: &str = "hazard_treatment.csv";
pub const HAZARD_CONTROL: &str = "hazard_control.csv";
pub const HAZARD_HISTORICAL: &str = "hazard_historical.csv";
pub const SURVIVAL_TREATMENT: &str = "survival_treatment.csv";
pub const SURVIVAL_CONTROL: &str = "survival_control.csv";
pub const SUMMARY: &str = "summary.csv";
pub const ACCEPTANCE: &str = "acceptance.json";
pub const MANIFEST: &str = "run_manifest.json";

const OUTPUTS: [&str; 10] = [
    FIXED_DRAWS,
    SPLITS,
    HAZARD_TREATMENT,
    HAZARD_CONTROL,
    HAZARD_HISTORICAL,
    SURVIVAL_TREATMENT,
    SURVIVAL_CONTROL,
    SUMMARY,
    ACCEPTANCE,
    MANIFEST,
];

/// Refuses to clobber earlier outputs unless `force` is set, in which case
/// they are removed so no stale file survives the new run.
pub fn prepare_dir(dir: &Path, names: &[&str], force: bool) -> Result<(), CliError> {
    for path in names.iter().map(|n| dir.join(n)).filter(|p| p.exists()) {
        if !force {
            return Err(CliError::validation(
                "output_exists",
                format!(
                    "{} already exists; pass --force to overwrite",
                    path.display()
                ),
            ));
        }
        std::fs::remove_file(&path).map_err(|e| CliError::io(&path, e))?;
    }
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn require_file(path: &Path, what: &str) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::validation(
            "missing_file",
            format!("{what} file {} does not exist", path.display()),
        ))
    }
}

struct Inputs {
    current: TrialData,
    historical: Option<TrialData>,
    report: ValidationReport,
}

fn load_inputs(cfg: &RunConfig, console: &mut dyn Write) -> Result<Inputs, CliError> {
    let data = &cfg.data;
    let current_path = data
        .current
        .as_ref()
        .ok_or_else(|| CliError::validation("missing_data", "no current data file given"))?;
    require_file(current_path, "current data")?;
    let schema = CsvSchema {
        time_col: data.time_col.clone(),
        event_col: data.event_col.clone(),
        treatment_col: data.treatment_col.clone(),
    };
    let current = load_trial_csv(current_path, &schema)?;
    let historical = match (&data.historical, cfg.model.borrow) {
        (Some(path), true) => {
            require_file(path, "historical data")?;
            let treatment = current.treatment_name().unwrap_or_default().to_string();
            Some(load_historical_csv(path, &schema, &treatment)?)
        }
        (Some(path), false) => {
            writeln!(
                console,
                "warning: borrow = false, ignoring historical data {}",
                path.display()
            )
            .ok();
            None
        }
        (None, true) => {
            return Err(CliError::validation(
                "missing_data",
                "borrowing needs historical data; set data.historical or borrow = false",
            ))
        }
        (None, false) => None,
    };
    let report = match &historical {
        Some(h) => validate_pair(&current, h)?,
        None => validate_single(&current),
    };
    Ok(Inputs {
        current,
        historical,
        report,
    })
}

/// Warnings about settings outside the calibrated regime.
pub fn shape_warning(cfg: &RunConfig) -> Option<String> {
    let h = &cfg.hyperparameters;
    let mixture = matches!(cfg.borrowing().model, BorrowModel::Mix | BorrowModel::All);
    (mixture && (h.a_tau != 1.0 || h.c_tau != 1.0)).then(|| {
        format!(
            "warning: a_tau = {}, c_tau = {}; the tolerable-difference calibration assumes unit shapes",
            h.a_tau, h.c_tau
        )
    })
}

fn run(
    cfg: &RunConfig,
    inputs: &Inputs,
    console: &mut dyn Write,
) -> Result<Vec<ChainOutput>, CliError> {
    let chain = cfg.chain_config();
    let tuning = cfg.tuning_params();
    let verbose = cfg.mcmc.verbose;
    if cfg.mcmc.chains == 1 {
        let out = run_chain_observed(
            &inputs.current,
            inputs.historical.as_ref(),
            &chain,
            &tuning,
            0,
            &mut |line| {
                if verbose {
                    writeln!(console, "{line}").ok();
                }
            },
        )?;
        return Ok(vec![out]);
    }
    if verbose {
        writeln!(
            console,
            "Starting MCMC sampler ({} chains)",
            cfg.mcmc.chains
        )
        .ok();
    }
    let outs = run_chains(
        &inputs.current,
        inputs.historical.as_ref(),
        &chain,
        &tuning,
        cfg.mcmc.chains,
    )?;
    if verbose {
        writeln!(console, "MCMC sampler complete").ok();
        for o in &outs {
            for (k, c) in o.acceptance.beta.iter().enumerate() {
                let name = format!("chain {} beta_{}", o.chain, k + 1);
                writeln!(console, "{}", acceptance_line(&name, c.rate())).ok();
            }
        }
    }
    Ok(outs)
}

fn acceptance_json(outs: &[ChainOutput]) -> serde_json::Value {
    let chains: Vec<_> = outs
        .iter()
        .map(|o| {
            let a = &o.acceptance;
            let beta: serde_json::Map<_, _> = a
                .beta
                .iter()
                .enumerate()
                .map(|(k, c)| (format!("beta_{}", k + 1), json!(c.rate())))
                .chain(
                    a.beta0
                        .iter()
                        .enumerate()
                        .map(|(k, c)| (format!("beta_0_{}", k + 1), json!(c.rate()))),
                )
                .collect();
            json!({
                "chain": o.chain,
                "rates": beta,
                "lambda": a.lambda.rate(),
                "lambda_0": o.borrow.then(|| a.lambda0.rate()),
                "birth": a.birth.rate(),
                "death": a.death.rate(),
                "move_split": a.move_split.rate(),
                "beta_fallbacks": a.beta_fallbacks,
                "counts": a,
            })
        })
        .collect();
    json!({ "chains": chains })
}

/// Covariate vectors of a treated and a control subject at the reference
/// level of every other covariate.
fn arm_vectors(current: &TrialData) -> (Vec<f64>, Vec<f64>) {
    let control = vec![0.0; current.p()];
    let mut treated = control.clone();
    if let Some(k) = current.treatment() {
        treated[k] = 1.0;
    }
    (treated, control)
}

/// Writes output files and remembers what it wrote.
pub struct Emitter<'a> {
    pub dir: &'a Path,
    pub files: Vec<PathBuf>,
}

impl Emitter<'_> {
    pub fn emit<F>(&mut self, name: &str, write: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<(), CliError>,
    {
        let path = self.dir.join(name);
        let mut w = create(&path)?;
        write(&mut w)?;
        w.flush().map_err(|e| CliError::io(&path, e))?;
        self.files.push(path);
        Ok(())
    }
}

pub struct FitResult {
    pub summary: FixedSummary,
    pub files: Vec<PathBuf>,
}

pub fn fit(cfg: &RunConfig, force: bool, console: &mut dyn Write) -> Result<FitResult, CliError> {
    cfg.validate()?;
    let inputs = load_inputs(cfg, console)?;
    let dir = &cfg.output.dir;
    prepare_dir(dir, &OUTPUTS, force)?;
    writeln!(console, "Choice of borrowing: {}", cfg.borrowing().model).ok();
    if let Some(w) = shape_warning(cfg) {
        writeln!(console, "{w}").ok();
    }
    writeln!(console, "{}\n", inputs.report.status).ok();

    let outs = run(cfg, &inputs, console)?;
    let level = cfg.output.level;
    let warmup = cfg.mcmc.warmup_iter;
    let mut out = Emitter {
        dir,
        files: Vec::new(),
    };

    let fixed = FixedDraws::from_outputs(&outs);
    out.emit(FIXED_DRAWS, |w| {
        Ok(fixed.write_csv(w, &draw_labels(&outs, warmup))?)
    })?;
    out.emit(SPLITS, |w| Ok(write_splits_csv(&outs, warmup, w)?))?;

    let pooled = pool_chains(&outs)?;
    let (treated, control) = arm_vectors(&inputs.current);
    for (name, x) in [(HAZARD_TREATMENT, &treated), (HAZARD_CONTROL, &control)] {
        let curve = predictive_hazard(&pooled, x, level)?;
        out.emit(name, |w| Ok(curve.write_csv(w)?))?;
    }
    for (name, x) in [(SURVIVAL_TREATMENT, &treated), (SURVIVAL_CONTROL, &control)] {
        let curve = predictive_survival(&pooled, x, level)?;
        out.emit(name, |w| Ok(curve.write_csv(w)?))?;
    }
    if pooled.borrow {
        let curve = smooth_hazard_historical(&pooled, level)?;
        out.emit(HAZARD_HISTORICAL, |w| Ok(curve.write_csv(w)?))?;
    }

    let summary = summarize_fixed(&fixed, level)?;
    out.emit(SUMMARY, |w| Ok(summary.write_csv(w)?))?;
    let acceptance = acceptance_json(&outs);
    out.emit(ACCEPTANCE, |w| {
        serde_json::to_writer_pretty(&mut *w, &acceptance)
            .map_err(|e| CliError::runtime("json", e.to_string()))
    })?;

    let written: Vec<String> = out
        .files
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .chain(std::iter::once(MANIFEST.to_string()))
        .collect();
    let manifest = json!({
        "tool": "hazborrow",
        "version": env!("CARGO_PKG_VERSION"),
        "command": "fit",
        "seed": cfg.mcmc.seed,
        "chains": cfg.mcmc.chains,
        "inputs": inputs.report,
        "files": written,
        "config": cfg,
    });
    out.emit(MANIFEST, |w| {
        serde_json::to_writer_pretty(&mut *w, &manifest)
            .map_err(|e| CliError::runtime("json", e.to_string()))
    })?;
    Ok(FitResult {
        summary,
        files: out.files,
    })
}
