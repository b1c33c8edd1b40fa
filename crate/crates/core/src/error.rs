//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("dimension {0} exceeds the supported maximum of 30")]
    DimensionTooLarge(u8),

    #[error("invalid mask: bits {bits:#b} do not fit in {d} dimensions")]
    InvalidMask { bits: u32, d: u8 },

    #[error("{gamma} is not dominated by {alpha}")]
    NotDominated { gamma: String, alpha: String },

    #[error("missing Fourier coefficient for mask {0}")]
    MissingCoefficient(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("ingest error: {0}")]
    Ingest(String),

    #[error("workload error: {0}")]
    Workload(String),

    #[error("strategy error: {0}")]
    Strategy(String),

    #[error("matrix is not groupable: {0}")]
    NotGroupable(String),

    #[error("privacy parameter error: {0}")]
    Privacy(String),

    #[error("budget constraint violated: {0}")]
    BudgetConstraint(String),

    #[error("suppressed strategy row {0} referenced")]
    SuppressedRow(usize),

    #[error("nothing to release: all group weights are zero")]
    NothingToRelease,

    #[error("workload is not in the row space of the strategy (max residual {0:.3e})")]
    NotInRowSpace(f64),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error in {file} line {line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
