use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("non-numeric value {value:?} in column `{column}` at row {row}")]
    NonNumeric {
        column: String,
        row: usize,
        value: String,
    },

    #[error("time-to-event must be strictly positive, found {value} at row {row}")]
    NonPositiveTime { row: usize, value: f64 },

    #[error("event indicator must be 0 or 1, found {value} at row {row}")]
    InvalidEvent { row: usize, value: f64 },

    #[error("no events observed")]
    NoEvents,

    #[error("empty dataset")]
    EmptyDataset,

    #[error("treatment column `{column}`: {reason}")]
    InvalidTreatment { column: String, reason: String },

    #[error("covariate columns differ: current {current:?}, historical {historical:?}")]
    CovariateMismatch {
        current: Vec<String>,
        historical: Vec<String>,
    },

    #[error("unknown level `{0}`")]
    UnknownLevel(String),

    #[error("a categorical covariate needs at least two levels, got {0}")]
    TooFewLevels(usize),

    #[error("cannot standardize a constant column")]
    ConstantColumn,

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("{0} has zero density")]
    ZeroDensity(&'static str),

    #[error("non-finite value in {what}")]
    NonFinite { what: String },

    #[error("sampler failed at iteration {iteration}: {what}")]
    Sampler { iteration: usize, what: String },

    #[error(
        "no tolerable difference exists: prior weight {p_0} never yields a posterior weight of 0.5"
    )]
    NoCrossing { p_0: f64 },

    #[error("no stored draws")]
    NoDraws,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag for the error.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::MissingColumn(_) => "missing_column",
            Error::NonNumeric { .. } => "non_numeric",
            Error::NonPositiveTime { .. } => "non_positive_time",
            Error::InvalidEvent { .. } => "invalid_event",
            Error::NoEvents => "no_events",
            Error::EmptyDataset => "empty_dataset",
            Error::InvalidTreatment { .. } => "invalid_treatment",
            Error::CovariateMismatch { .. } => "covariate_mismatch",
            Error::UnknownLevel(_) => "unknown_level",
            Error::TooFewLevels(_) => "too_few_levels",
            Error::ConstantColumn => "constant_column",
            Error::InvalidPartition(_) => "invalid_partition",
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::ZeroDensity(_) => "zero_density",
            Error::NonFinite { .. } => "non_finite",
            Error::Sampler { .. } => "sampler",
            Error::NoCrossing { .. } => "no_crossing",
            Error::NoDraws => "no_draws",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }

    /// Whether the error stems from bad user input rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::NonFinite { .. } | Error::Sampler { .. } | Error::Io(_) | Error::Json(_)
        )
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
