use thiserror::Error;

/// Errors surfaced by the simulator. Statistical outcomes (accept/reject) are never errors.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid interval [{lo}, {hi}] for domain size {n}")]
    InvalidInterval { lo: usize, hi: usize, n: usize },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("zero-mass restriction to [{lo}, {hi}]")]
    ZeroMass { lo: usize, hi: usize },

    #[error("empty query set")]
    EmptyQuerySet,

    #[error("index {index} outside domain [1, {n}]")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("insufficient samples: need {needed}, got {got}")]
    InsufficientSamples { needed: u64, got: u64 },

    #[error("linear program failed: {0}")]
    Solver(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable kebab-case name of the variant, for machine-readable error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidDistribution(_) => "invalid-distribution",
            Error::InvalidInterval { .. } => "invalid-interval",
            Error::InvalidPartition(_) => "invalid-partition",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::ZeroMass { .. } => "zero-mass",
            Error::EmptyQuerySet => "empty-query-set",
            Error::IndexOutOfRange { .. } => "index-out-of-range",
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::InsufficientSamples { .. } => "insufficient-samples",
            Error::Solver(_) => "solver",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
