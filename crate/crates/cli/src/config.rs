//! Run configuration: a TOML file whose sections mirror the argument
//! blocks of the fitting function. Command-line flags override file
//! values, which override the package defaults.

use std::path::{Path, PathBuf};

use hazborrow::borrowing::{BorrowModel, BorrowingSpec};
use hazborrow::priors::SmoothingSpec;
use hazborrow::sampler::{ChainConfig, TuningParams};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    pub current: Option<PathBuf>,
    pub historical: Option<PathBuf>,
    pub time_col: String,
    pub event_col: String,
    /// First covariate column when absent.
    pub treatment_col: Option<String>,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            current: None,
            historical: None,
            time_col: "tte".into(),
            event_col: "event".into(),
            treatment_col: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub borrow: bool,
    pub model_choice: BorrowModel,
    pub sample_prior: bool,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            borrow: true,
            model_choice: BorrowModel::Mix,
            sample_prior: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TuningSection {
    pub cprop_beta: f64,
    pub cprop_beta_0: f64,
    pub pi_b: f64,
    pub alpha: f64,
    #[serde(rename = "Jmax")]
    pub j_max: usize,
}

impl Default for TuningSection {
    fn default() -> Self {
        let t = TuningParams::default();
        Self {
            cprop_beta: t.cprop_beta,
            cprop_beta_0: t.cprop_beta0,
            pi_b: t.pi_b,
            alpha: t.alpha,
            j_max: SmoothingSpec::default().j_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HyperSection {
    pub a_tau: f64,
    pub b_tau: f64,
    pub c_tau: f64,
    pub d_tau: f64,
    pub p_0: f64,
    pub a_sigma: f64,
    pub b_sigma: f64,
    pub clam_smooth: f64,
    pub phi: f64,
}

impl Default for HyperSection {
    fn default() -> Self {
        let b = BorrowingSpec::default();
        let s = SmoothingSpec::default();
        Self {
            a_tau: b.a_tau,
            b_tau: b.b_tau,
            c_tau: b.c_tau,
            d_tau: b.d_tau,
            p_0: b.p_0,
            a_sigma: s.a_sigma,
            b_sigma: s.b_sigma,
            clam_smooth: s.c_lambda,
            phi: s.phi,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LambdaSection {
    pub a_lambda: f64,
    pub b_lambda: f64,
}

impl Default for LambdaSection {
    fn default() -> Self {
        let t = TuningParams::default();
        Self {
            a_lambda: t.a_lambda,
            b_lambda: t.b_lambda,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McmcSection {
    pub iter: usize,
    pub warmup_iter: usize,
    pub refresh: usize,
    pub verbose: bool,
    pub max_grid: usize,
    pub seed: u64,
    pub chains: usize,
}

impl Default for McmcSection {
    fn default() -> Self {
        let c = ChainConfig::default();
        Self {
            iter: c.iter,
            warmup_iter: c.warmup_iter,
            refresh: c.refresh,
            verbose: true,
            max_grid: c.max_grid,
            seed: c.seed,
            chains: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Credible level of summaries and curve bands.
    pub level: f64,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("hazborrow_out"),
            level: 0.95,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub data: DataSection,
    pub model: ModelSection,
    pub tuning: TuningSection,
    pub hyperparameters: HyperSection,
    pub lambda_hyperparameters: LambdaSection,
    pub mcmc: McmcSection,
    pub output: OutputSection,
}

impl RunConfig {
    /// Reads a TOML configuration or the `config` block of a run manifest.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::validation("config", format!("{}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "json") {
            #[derive(Deserialize)]
            struct Manifest {
                config: RunConfig,
            }
            let m: Manifest = serde_json::from_str(&text)
                .map_err(|e| CliError::validation("config", format!("{}: {e}", path.display())))?;
            return Ok(m.config);
        }
        Self::from_toml(&text).map_err(|e| {
            CliError::validation("config", format!("{}: {}", path.display(), e.message))
        })
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::validation("config", e.to_string()))
    }

    pub fn borrowing(&self) -> BorrowingSpec {
        let h = &self.hyperparameters;
        BorrowingSpec {
            model: if self.model.borrow {
                self.model.model_choice
            } else {
                BorrowModel::None
            },
            a_tau: h.a_tau,
            b_tau: h.b_tau,
            c_tau: h.c_tau,
            d_tau: h.d_tau,
            p_0: h.p_0,
        }
    }

    pub fn chain_config(&self) -> ChainConfig {
        let h = &self.hyperparameters;
        ChainConfig {
            iter: self.mcmc.iter,
            warmup_iter: self.mcmc.warmup_iter,
            refresh: self.mcmc.refresh,
            seed: self.mcmc.seed,
            borrow: self.model.borrow,
            borrowing: self.borrowing(),
            smoothing: SmoothingSpec {
                phi: h.phi,
                j_max: self.tuning.j_max,
                c_lambda: h.clam_smooth,
                a_sigma: h.a_sigma,
                b_sigma: h.b_sigma,
            },
            max_grid: self.mcmc.max_grid,
            verbose: self.mcmc.verbose,
            sample_prior: self.model.sample_prior,
        }
    }

    pub fn tuning_params(&self) -> TuningParams {
        TuningParams {
            cprop_beta: self.tuning.cprop_beta,
            cprop_beta0: self.tuning.cprop_beta_0,
            pi_b: self.tuning.pi_b,
            alpha: self.tuning.alpha,
            a_lambda: self.lambda_hyperparameters.a_lambda,
            b_lambda: self.lambda_hyperparameters.b_lambda,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.chain_config().validate()?;
        self.tuning_params().validate()?;
        if self.mcmc.chains == 0 {
            return Err(CliError::validation("chains", "need at least one chain"));
        }
        if !(self.output.level > 0.0 && self.output.level < 1.0) {
            return Err(CliError::validation("level", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = RunConfig::from_toml("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.tuning.cprop_beta, 0.5);
        assert_eq!(c.lambda_hyperparameters.a_lambda, 0.01);
        assert_eq!(c.model.model_choice, BorrowModel::Mix);
        c.validate().unwrap();
    }

    #[test]
    fn sections_map_onto_sampler_settings() {
        let c = RunConfig::from_toml(
            "[tuning]\ncprop_beta = 3.25\nJmax = 4\n[hyperparameters]\nclam_smooth = 0.3\n\
             [model]\nmodel_choice = \"uni\"\n[mcmc]\niter = 10\n",
        )
        .unwrap();
        let chain = c.chain_config();
        assert_eq!(chain.smoothing.j_max, 4);
        assert_eq!(chain.smoothing.c_lambda, 0.3);
        assert_eq!(chain.borrowing.model, BorrowModel::Uni);
        assert_eq!(chain.iter, 10);
        assert_eq!(c.tuning_params().cprop_beta, 3.25);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("[mcmc]\niters = 5\n").is_err());
        assert!(RunConfig::from_toml("[plotting]\n").is_err());
    }

    #[test]
    fn no_borrowing_switches_the_model_off() {
        let c = RunConfig::from_toml("[model]\nborrow = false\n").unwrap();
        assert_eq!(c.borrowing().model, BorrowModel::None);
        c.validate().unwrap();
    }
}
