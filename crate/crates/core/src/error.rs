use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A malformed or invariant-violating row in one of the input tables.
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: u64,
        message: String,
    },

    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A correlation-type statistic is undefined because one side has no spread.
    #[error("zero variance in {0}")]
    ZeroVariance(String),

    #[error("design matrix is rank deficient: {0}")]
    RankDeficient(String),

    #[error("bootstrap replicate {replicate} still degenerate after {retries} redraws")]
    BootstrapExhausted { replicate: usize, retries: usize },

    #[error("covariance not positive definite after ridge shift of {ridge}")]
    NotPositiveDefinite { ridge: f64 },
}
