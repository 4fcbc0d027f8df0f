use thiserror::Error;

/// Errors produced by scenario ingestion, metric evaluation and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read scenario file: {0}")]
    Io(#[from] std::io::Error),

    #[error("failed to parse scenario: {0}")]
    Parse(String),

    #[error("invalid field `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("degenerate desired beampattern: {0}")]
    DegenerateDesired(&'static str),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("exhaustive search over {subsets} subsets exceeds budget of {budget}")]
    BudgetExceeded { subsets: u128, budget: u128 },
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
