use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};

use crate::borrowing::{BorrowModel, BorrowingSpec};
use crate::data::TrialData;
use crate::error::{Error, Result};
use crate::model::{
    event_linear_term, log_likelihood_from_stats, weighted_interval_stats, HazardVector,
    IntervalStats, TimePartition,
};
use crate::priors::{
    gmrf_log_density_unchecked, inv_gamma_log_pdf, normal_log_pdf, split_location_log_prior,
    truncated_poisson_log_pmf, GmrfState, SmoothingSpec,
};

use super::{ChainConfig, TuningParams};

/// Commensurability variances.
#[derive(Debug, Clone, PartialEq)]
pub enum Tau {
    /// No borrowing.
    None,
    /// One variance per interval (`mix`, `uni`).
    PerInterval(Vec<f64>),
    /// One variance for every interval (`all`).
    Shared(f64),
}

impl Tau {
    pub fn for_interval(&self, j: usize) -> f64 {
        match self {
            Tau::None => f64::NAN,
            Tau::PerInterval(t) => t[j],
            Tau::Shared(t) => *t,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        match self {
            Tau::None => Vec::new(),
            Tau::PerInterval(t) => t.clone(),
            Tau::Shared(t) => vec![*t],
        }
    }
}

/// Every sampled parameter at one iteration.
///
/// Without borrowing `lambda0` is absent and the GMRF is placed on the
/// current baseline hazard `lambda` instead.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub partition: TimePartition,
    pub lambda: HazardVector,
    pub lambda0: Option<HazardVector>,
    pub beta: Vec<f64>,
    pub beta0: Vec<f64>,
    pub tau: Tau,
    pub gmrf: GmrfState,
}

impl ModelState {
    pub fn j(&self) -> usize {
        self.partition.j()
    }

    /// The hazard vector carrying the GMRF prior.
    pub fn anchor(&self) -> &HazardVector {
        self.lambda0.as_ref().unwrap_or(&self.lambda)
    }

    pub(crate) fn anchor_mut(&mut self) -> &mut HazardVector {
        match self.lambda0.as_mut() {
            Some(l0) => l0,
            None => &mut self.lambda,
        }
    }

    /// Checks that every dimension-dependent vector matches the partition.
    pub fn check_coherence(&self) -> Result<()> {
        let m = self.partition.intervals();
        let mismatch = |what, found| Error::DimensionMismatch {
            what,
            expected: m,
            found,
        };
        if self.lambda.len() != m {
            return Err(mismatch("lambda", self.lambda.len()));
        }
        if let Some(l0) = &self.lambda0 {
            if l0.len() != m {
                return Err(mismatch("lambda0", l0.len()));
            }
        }
        if let Tau::PerInterval(t) = &self.tau {
            if t.len() != m {
                return Err(mismatch("tau", t.len()));
            }
        }
        let positive = |v: &[f64]| v.iter().all(|&x| x > 0.0 && x.is_finite());
        if !positive(self.lambda.as_slice())
            || self
                .lambda0
                .as_ref()
                .is_some_and(|l| !positive(l.as_slice()))
            || !positive(&self.tau.values())
            || !(self.gmrf.sigma2 > 0.0)
        {
            return Err(Error::NonFinite {
                what: "state contains a nonpositive hazard or variance".into(),
            });
        }
        Ok(())
    }
}

/// Data and hyperparameters shared by every kernel of a chain.
#[derive(Debug, Clone)]
pub struct SamplerContext<'a> {
    pub(crate) current: &'a TrialData,
    pub(crate) historical: Option<&'a TrialData>,
    pub(crate) smoothing: SmoothingSpec,
    pub(crate) borrowing: BorrowingSpec,
    pub(crate) tuning: TuningParams,
    pub(crate) end: f64,
    pub(crate) use_likelihood: bool,
}

impl<'a> SamplerContext<'a> {
    /// With `config.borrow` false any historical data is ignored. Historical
    /// data must not carry the treatment column (see
    /// [`TrialData::into_historical`]).
    pub fn new(
        current: &'a TrialData,
        historical: Option<&'a TrialData>,
        config: &ChainConfig,
        tuning: &TuningParams,
    ) -> Result<Self> {
        config.validate()?;
        tuning.validate()?;
        let historical = if config.borrow {
            let hist = historical
                .ok_or_else(|| Error::param("data_hist", "borrowing requires historical data"))?;
            if let Some(name) = current.treatment_name() {
                if hist.column_index(name).is_some() {
                    return Err(Error::InvalidTreatment {
                        column: name.to_string(),
                        reason: "drop the treatment column from historical data first".into(),
                    });
                }
            }
            Some(hist)
        } else {
            None
        };
        let end = historical
            .map_or(0.0, TrialData::max_event_time)
            .max(current.max_event_time());
        let borrowing = if config.borrow {
            config.borrowing
        } else {
            config.borrowing.with_model(BorrowModel::None)
        };
        Ok(Self {
            current,
            historical,
            smoothing: config.smoothing,
            borrowing,
            tuning: *tuning,
            end,
            use_likelihood: !config.sample_prior,
        })
    }

    pub fn borrow(&self) -> bool {
        self.historical.is_some()
    }

    /// Fixed last split point `s_{J+1}`: the largest event time.
    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn current(&self) -> &TrialData {
        self.current
    }

    pub fn historical(&self) -> Option<&TrialData> {
        self.historical
    }

    pub fn borrowing(&self) -> &BorrowingSpec {
        &self.borrowing
    }

    pub fn smoothing(&self) -> &SmoothingSpec {
        &self.smoothing
    }

    pub fn tuning(&self) -> &TuningParams {
        &self.tuning
    }

    pub(crate) fn stats(
        data: &TrialData,
        beta: &[f64],
        partition: &TimePartition,
    ) -> IntervalStats {
        let weights = exp_linear_predictor(data, beta);
        weighted_interval_stats(data.tte(), data.event(), &weights, partition)
    }

    /// Joint log posterior up to a constant. Flat priors on `mu` and the
    /// regression coefficients contribute nothing.
    pub fn log_posterior(&self, state: &ModelState) -> f64 {
        let mut total = 0.0;
        if self.use_likelihood {
            total += dataset_log_likelihood(
                self.current,
                &state.beta,
                &state.partition,
                state.lambda.as_slice(),
            );
            if let (Some(hist), Some(l0)) = (self.historical, &state.lambda0) {
                total +=
                    dataset_log_likelihood(hist, &state.beta0, &state.partition, l0.as_slice());
            }
        }
        total += truncated_poisson_log_pmf(state.j(), self.smoothing.phi, self.smoothing.j_max)
            .unwrap_or(f64::NEG_INFINITY);
        total += split_location_log_prior(&state.partition).unwrap_or(f64::NEG_INFINITY);
        let anchor = state.anchor().logs();
        total += gmrf_log_density_unchecked(&anchor, state.gmrf, self.smoothing.c_lambda);
        total += inv_gamma_log_pdf(
            state.gmrf.sigma2,
            self.smoothing.a_sigma,
            self.smoothing.b_sigma,
        );
        if let Some(l0) = &state.lambda0 {
            for (j, (l, l0)) in state
                .lambda
                .as_slice()
                .iter()
                .zip(l0.as_slice())
                .enumerate()
            {
                total += normal_log_pdf(l.ln(), l0.ln(), state.tau.for_interval(j));
            }
            total += state
                .tau
                .values()
                .iter()
                .map(|&t| self.borrowing.tau_log_prior(t))
                .sum::<f64>();
        }
        total
    }
}

pub(crate) fn exp_linear_predictor(data: &TrialData, beta: &[f64]) -> Vec<f64> {
    if beta.is_empty() {
        vec![1.0; data.n()]
    } else {
        data.design()
            .linear_predictor(beta)
            .into_iter()
            .map(f64::exp)
            .collect()
    }
}

pub(crate) fn dataset_log_likelihood(
    data: &TrialData,
    beta: &[f64],
    partition: &TimePartition,
    lambda: &[f64],
) -> f64 {
    let stats = SamplerContext::stats(data, beta, partition);
    let linear = event_linear_term(data, beta, partition.end());
    log_likelihood_from_stats(&stats, lambda) + linear
}

/// NaN when the parameters are not finite and positive.
pub(crate) fn sample_inv_gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64, scale: f64) -> f64 {
    match Gamma::new(shape, 1.0 / scale) {
        Ok(g) if scale.is_finite() && scale > 0.0 => 1.0 / g.sample(rng),
        _ => f64::NAN,
    }
}

/// Draw of `tau` from its prior.
pub(crate) fn sample_tau_prior<R: Rng + ?Sized>(rng: &mut R, spec: &BorrowingSpec) -> f64 {
    let lump = match spec.model {
        BorrowModel::Uni => true,
        _ => spec.p_0 >= 1.0 || rng.random::<f64>() < spec.p_0,
    };
    if lump {
        sample_inv_gamma(rng, spec.a_tau, spec.b_tau)
    } else {
        sample_inv_gamma(rng, spec.c_tau, spec.d_tau)
    }
}

fn sample_truncated_poisson<R: Rng + ?Sized>(rng: &mut R, phi: f64, j_max: usize) -> usize {
    let poisson = Poisson::new(phi).expect("validated rate");
    loop {
        let j: f64 = poisson.sample(rng);
        if j <= j_max as f64 {
            return j as usize;
        }
    }
}

/// Interior split points drawn from their prior: the even order statistics
/// of `2J + 1` uniforms on `(0, end)`.
pub(crate) fn sample_split_locations<R: Rng + ?Sized>(rng: &mut R, j: usize, end: f64) -> Vec<f64> {
    let mut u: Vec<f64> = (0..2 * j + 1)
        .map(|_| rng.sample::<f64, _>(rand_distr::Open01) * end)
        .collect();
    u.sort_by(f64::total_cmp);
    u.into_iter().skip(1).step_by(2).take(j).collect()
}

const INIT_ATTEMPTS: usize = 100;

/// Initial state. `J` and the split locations come from their priors; the
/// anchor hazards are drawn per interval from `Gamma(events, exposure)`
/// (shape, rate), whose mean is the interval MLE. `mu` and `sigma2` start
/// at the mean and variance of the log anchor hazards (the `sigma2` prior
/// mode when fewer than two intervals), `tau` is drawn from its prior and
/// the regression coefficients start at zero. Partitions that leave an
/// interval without events or exposure are redrawn.
pub fn init_state<R: Rng + ?Sized>(ctx: &SamplerContext<'_>, rng: &mut R) -> Result<ModelState> {
    let anchor_data = ctx.historical.unwrap_or(ctx.current);
    let mut chosen = None;
    for attempt in 0..=INIT_ATTEMPTS {
        let j = if attempt == INIT_ATTEMPTS {
            0
        } else {
            sample_truncated_poisson(rng, ctx.smoothing.phi, ctx.smoothing.j_max)
        };
        let interior = sample_split_locations(rng, j, ctx.end);
        let Ok(partition) = TimePartition::with_interior(ctx.end, &interior) else {
            continue;
        };
        let stats = SamplerContext::stats(anchor_data, &[], &partition);
        if stats
            .events
            .iter()
            .zip(&stats.exposure)
            .all(|(&d, &e)| d > 0.0 && e > 0.0)
        {
            chosen = Some((partition, stats));
            break;
        }
    }
    let (partition, stats) = chosen.ok_or_else(|| Error::Sampler {
        iteration: 0,
        what: "could not initialise a partition with events in every interval".into(),
    })?;

    let mut anchor = Vec::with_capacity(partition.intervals());
    for (&d, &e) in stats.events.iter().zip(&stats.exposure) {
        let g = Gamma::new(d, 1.0 / e).map_err(|err| Error::Sampler {
            iteration: 0,
            what: err.to_string(),
        })?;
        anchor.push(g.sample(rng).max(f64::MIN_POSITIVE));
    }
    let logs: Vec<f64> = anchor.iter().map(|l| l.ln()).collect();
    let m = logs.len() as f64;
    let mu = logs.iter().sum::<f64>() / m;
    let var = if logs.len() > 1 {
        logs.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (m - 1.0)
    } else {
        0.0
    };
    let sigma2 = if var > 0.0 {
        var
    } else {
        ctx.smoothing.b_sigma / (ctx.smoothing.a_sigma + 1.0)
    };
    let anchor = HazardVector::new(anchor)?;

    let intervals = partition.intervals();
    let (lambda, lambda0, tau) = if ctx.borrow() {
        let tau = match ctx.borrowing.model {
            BorrowModel::All => Tau::Shared(sample_tau_prior(rng, &ctx.borrowing)),
            _ => Tau::PerInterval(
                (0..intervals)
                    .map(|_| sample_tau_prior(rng, &ctx.borrowing))
                    .collect(),
            ),
        };
        (anchor.clone(), Some(anchor), tau)
    } else {
        (anchor, None, Tau::None)
    };
    let state = ModelState {
        partition,
        lambda,
        lambda0,
        beta: vec![0.0; ctx.current.p()],
        beta0: vec![0.0; ctx.historical.map_or(0, TrialData::p)],
        tau,
        gmrf: GmrfState { mu, sigma2 },
    };
    state.check_coherence()?;
    Ok(state)
}
