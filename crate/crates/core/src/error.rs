use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure modes shared across the crate.
///
/// Variants are grouped by the CLI exit class they map to: data problems
/// (ingestion, splitting, guards on inputs), numerical problems (solvers),
/// and invalid configuration.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },

    #[error("row {row}: missing or non-finite value in column `{column}`")]
    MissingValue { row: usize, column: String },

    #[error("row {row}: timestamp {timestamp} does not increase within series `{series}`")]
    NonMonotoneTimestamp {
        row: usize,
        timestamp: i64,
        series: String,
    },

    #[error("{what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("split `{0}` would be empty")]
    EmptySplit(&'static str),

    #[error("target standard deviation is zero; cannot standardize")]
    ConstantTarget,

    #[error("MAPE undefined: |y| below guard at indices {indices:?}")]
    MapeGuard { indices: Vec<usize> },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error(
        "fixed-point iteration did not converge after {iterations} iterations \
         (last mu {last_mu:e}, objective {objective:e}, relative step {last_step:e})"
    )]
    NonConvergence {
        iterations: usize,
        last_mu: f64,
        objective: f64,
        last_step: f64,
    },

    #[error(
        "adaptive rule has {params} parameters but only {rows} training rows \
         (window {tau}); reduce the window or allow over-parameterized fits"
    )]
    ParameterGuard {
        params: usize,
        rows: usize,
        tau: usize,
    },

    #[error("every grid point failed: {}", .0.join("; "))]
    AllGridPointsFailed(Vec<String>),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Data,
    Numerical,
    Config,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Io(_)
            | Error::Csv(_)
            | Error::Json(_)
            | Error::MalformedRow { .. }
            | Error::MissingValue { .. }
            | Error::NonMonotoneTimestamp { .. }
            | Error::DimensionMismatch { .. }
            | Error::EmptySplit(_)
            | Error::ConstantTarget
            | Error::MapeGuard { .. }
            | Error::ParameterGuard { .. } => ErrorClass::Data,
            Error::Singular(_) | Error::NonConvergence { .. } | Error::AllGridPointsFailed(_) => {
                ErrorClass::Numerical
            }
            Error::InvalidParameter(_) | Error::Unsupported(_) => ErrorClass::Config,
        }
    }
}
