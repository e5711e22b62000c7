//! `hazborrow` command-line interface.
//!
//! Exit codes: 0 on success, 2 for invalid input or configuration, 3 for
//! failures while sampling or writing. Every failure prints a human line
//! on standard error and a JSON record on standard output.

mod config;
mod error;
mod fit;
mod tools;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hazborrow::borrowing::{BorrowModel, BorrowingSpec};
use hazborrow::simulate::{BaselineHazard, SimSpec};

use config::RunConfig;
use error::{CliError, EXIT_VALIDATION};

#[derive(Parser)]
#[command(
    name = "hazborrow",
    version,
    about = "Bayesian dynamic borrowing for time-to-event data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the borrowing model and write draws, curves and summaries.
    Fit(FitArgs),
    /// Simulate a Weibull or piecewise-exponential trial with historical controls.
    Simulate(SimulateArgs),
    /// Posterior lump weight against squared log-hazard differences.
    Profile(ProfileArgs),
    /// Summarise stored draws of a previous fit.
    Summarize(SummarizeArgs),
}

#[derive(Args)]
struct FitArgs {
    /// TOML run configuration, or the run_manifest.json of an earlier fit.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Current trial CSV.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Historical control CSV.
    #[arg(long)]
    data_hist: Option<PathBuf>,
    #[arg(long)]
    borrow: Option<bool>,
    #[arg(long)]
    model_choice: Option<BorrowModel>,
    #[arg(long)]
    time_col: Option<String>,
    #[arg(long)]
    event_col: Option<String>,
    #[arg(long)]
    treatment_col: Option<String>,
    #[arg(long)]
    iter: Option<usize>,
    #[arg(long)]
    warmup_iter: Option<usize>,
    #[arg(long)]
    refresh: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    max_grid: Option<usize>,
    #[arg(long)]
    cprop_beta: Option<f64>,
    #[arg(long)]
    level: Option<f64>,
    /// Sample the prior instead of the posterior.
    #[arg(long)]
    sample_prior: bool,
    /// Suppress progress lines.
    #[arg(long)]
    quiet: bool,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Overwrite outputs of an earlier run.
    #[arg(long)]
    force: bool,
}

impl FitArgs {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        fn set<T: Clone>(slot: &mut T, value: &Option<T>) {
            if let Some(v) = value {
                *slot = v.clone();
            }
        }
        if self.data.is_some() {
            cfg.data.current = self.data.clone();
        }
        if self.data_hist.is_some() {
            cfg.data.historical = self.data_hist.clone();
        }
        if self.treatment_col.is_some() {
            cfg.data.treatment_col = self.treatment_col.clone();
        }
        set(&mut cfg.data.time_col, &self.time_col);
        set(&mut cfg.data.event_col, &self.event_col);
        set(&mut cfg.model.borrow, &self.borrow);
        set(&mut cfg.model.model_choice, &self.model_choice);
        set(&mut cfg.mcmc.iter, &self.iter);
        set(&mut cfg.mcmc.warmup_iter, &self.warmup_iter);
        set(&mut cfg.mcmc.refresh, &self.refresh);
        set(&mut cfg.mcmc.seed, &self.seed);
        set(&mut cfg.mcmc.chains, &self.chains);
        set(&mut cfg.mcmc.max_grid, &self.max_grid);
        set(&mut cfg.tuning.cprop_beta, &self.cprop_beta);
        set(&mut cfg.output.level, &self.level);
        set(&mut cfg.output.dir, &self.out_dir);
        if self.sample_prior {
            cfg.model.sample_prior = true;
        }
        if self.quiet {
            cfg.mcmc.verbose = false;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct SimulateArgs {
    /// TOML simulation spec; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n_control: Option<usize>,
    #[arg(long)]
    n_treatment: Option<usize>,
    #[arg(long)]
    n_historical: Option<usize>,
    /// Weibull shape; switches a piecewise spec to Weibull.
    #[arg(long)]
    shape: Option<f64>,
    /// Weibull scale, acting as a rate: H(t) = (scale t)^shape.
    #[arg(long)]
    scale: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    beta_trt: Option<f64>,
    /// Administrative censoring time.
    #[arg(long)]
    censor: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    historical_shift: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long)]
    force: bool,
}

impl SimulateArgs {
    fn resolve(&self) -> Result<SimSpec, CliError> {
        let mut spec = match &self.config {
            Some(path) => tools::load_sim_spec(path)?,
            None => SimSpec::default(),
        };
        if let Some(v) = self.n_control {
            spec.n_control = v;
        }
        if let Some(v) = self.n_treatment {
            spec.n_treatment = v;
        }
        if let Some(v) = self.n_historical {
            spec.n_historical = v;
        }
        if self.shape.is_some() || self.scale.is_some() {
            let (shape0, scale0) = match spec.hazard {
                BaselineHazard::Weibull { shape, scale } => (shape, scale),
                BaselineHazard::Piecewise { .. } => (1.5, 0.4),
            };
            spec.hazard = BaselineHazard::Weibull {
                shape: self.shape.unwrap_or(shape0),
                scale: self.scale.unwrap_or(scale0),
            };
        }
        if let Some(v) = self.beta_trt {
            spec.beta_trt = v;
        }
        if self.censor.is_some() {
            spec.censor = self.censor;
        }
        if let Some(v) = self.historical_shift {
            spec.historical_shift = v;
        }
        if let Some(v) = self.seed {
            spec.seed = v;
        }
        Ok(spec)
    }
}

#[derive(Args)]
struct ProfileArgs {
    /// TOML run configuration supplying the hyperparameters.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Prior lump weights, one curve each.
    #[arg(long, value_delimiter = ',')]
    p0: Vec<f64>,
    #[arg(long)]
    model_choice: Option<BorrowModel>,
    #[arg(long)]
    a_tau: Option<f64>,
    #[arg(long)]
    b_tau: Option<f64>,
    #[arg(long)]
    c_tau: Option<f64>,
    #[arg(long)]
    d_tau: Option<f64>,
    /// Upper end of the grid of squared differences.
    #[arg(long, default_value_t = 0.25)]
    sse_max: f64,
    #[arg(long, default_value_t = 101)]
    points: usize,
    /// Intervals summed over under `all`.
    #[arg(long, default_value_t = 1)]
    intervals: usize,
    #[arg(long, default_value = "profile")]
    out_dir: PathBuf,
    #[arg(long)]
    force: bool,
}

impl ProfileArgs {
    fn resolve(&self) -> Result<(RunConfig, tools::ProfileRequest), CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let h = &mut cfg.hyperparameters;
        for (slot, v) in [
            (&mut h.a_tau, self.a_tau),
            (&mut h.b_tau, self.b_tau),
            (&mut h.c_tau, self.c_tau),
            (&mut h.d_tau, self.d_tau),
        ] {
            if let Some(v) = v {
                *slot = v;
            }
        }
        if let Some(m) = self.model_choice {
            cfg.model.model_choice = m;
        }
        let h = &cfg.hyperparameters;
        let spec = BorrowingSpec {
            model: cfg.model.model_choice,
            a_tau: h.a_tau,
            b_tau: h.b_tau,
            c_tau: h.c_tau,
            d_tau: h.d_tau,
            p_0: h.p_0,
        };
        let p_0 = if self.p0.is_empty() {
            vec![h.p_0]
        } else {
            self.p0.clone()
        };
        let req = tools::ProfileRequest {
            spec,
            p_0,
            sse_max: self.sse_max,
            points: self.points,
            intervals: self.intervals,
        };
        Ok((cfg, req))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Csv,
}

#[derive(Args)]
struct SummarizeArgs {
    /// Output directory of a fit, or a fixed_draws.csv file.
    path: PathBuf,
    #[arg(long, default_value = "out_fixed")]
    estimator: String,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let stderr = &mut std::io::stderr();
    let stdout = &mut std::io::stdout();
    let io = |e: std::io::Error| CliError::runtime("io", e.to_string());
    match cli.command {
        Command::Fit(args) => {
            let cfg = args.resolve()?;
            let result = fit::fit(&cfg, args.force, stderr)?;
            write!(stdout, "{}", result.summary.to_text()).map_err(io)?;
            writeln!(
                stderr,
                "wrote {} files to {}",
                result.files.len(),
                cfg.output.dir.display()
            )
            .map_err(io)?;
        }
        Command::Simulate(args) => {
            let spec = args.resolve()?;
            for path in tools::simulate(&spec, &args.out_dir, args.force)? {
                writeln!(stdout, "{}", path.display()).map_err(io)?;
            }
        }
        Command::Profile(args) => {
            let (cfg, req) = args.resolve()?;
            if let Some(w) = fit::shape_warning(&cfg) {
                writeln!(stderr, "{w}").map_err(io)?;
            }
            let profiles = tools::profiles(&req)?;
            tools::write_profiles(&profiles, &args.out_dir, args.force)?;
            for p in &profiles {
                match (p.xi, p.xi_squared()) {
                    (Some(x), Some(x2)) => {
                        writeln!(stdout, "p_0 = {}: xi = {x:.5}, xi^2 = {x2:.5}", p.p_0)
                    }
                    _ => writeln!(stdout, "p_0 = {}: q0 never falls to 0.5", p.p_0),
                }
                .map_err(io)?;
            }
        }
        Command::Summarize(args) => {
            let summary = tools::summarize(&args.path, &args.estimator, args.level)?;
            match args.format {
                Format::Text => write!(stdout, "{}", summary.to_text()).map_err(io)?,
                Format::Csv => summary.write_csv(&mut *stdout)?,
            }
        }
    }
    Ok(())
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("error: {e}");
    println!("{}", e.to_json());
    ExitCode::from(e.code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // Help and version requests.
            e.print().ok();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.render().to_string();
            let first = message.lines().next().unwrap_or("invalid arguments");
            let first = first.trim_start_matches("error: ").to_string();
            e.print().ok();
            println!("{}", CliError::validation("usage", first).to_json());
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}
