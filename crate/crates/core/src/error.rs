use thiserror::Error;

/// Errors produced by model construction, evaluation and fitting.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is singular to working precision")]
    SingularMatrix,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("{value} is outside the domain ({reason})")]
    Domain { value: f64, reason: String },

    #[error("numerical underflow at observation {index}: likelihood contribution {value:e}")]
    NumericalUnderflow { index: usize, value: f64 },

    #[error("coordinate {0} has no strictly positive reward")]
    DegenerateMarginal(usize),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("transform parameter search failed: {0}")]
    BetaSearchFailed(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

impl Error {
    pub(crate) fn domain(value: f64, reason: impl Into<String>) -> Self {
        Error::Domain {
            value,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
