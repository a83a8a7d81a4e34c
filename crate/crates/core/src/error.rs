use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range for size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid offspring law: {0}")]
    InvalidLaw(String),

    #[error("invalid probability vector: {0}")]
    InvalidPVector(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("size {n} is not reachable: {reason}")]
    Unreachable { n: usize, reason: String },

    #[error("budget of {budget} {what} exceeded; retry with a larger budget")]
    BudgetExceeded { what: &'static str, budget: u64 },

    #[error("{what} size {size} exceeds the cap of {cap}")]
    SizeCap {
        what: &'static str,
        size: usize,
        cap: usize,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid metric: {0}")]
    InvalidMetric(String),

    #[error("gate check failed: {0}")]
    GateFailed(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn check_index(index: usize, size: usize) -> Result<()> {
        if index < size {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { index, size })
        }
    }
}
