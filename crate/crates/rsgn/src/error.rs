//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by sketch construction, problem evaluation, the solvers
/// and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A vector or matrix had the wrong length for the requested operation.
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    /// A parameter was outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A residual component evaluated to NaN or infinity.
    #[error("non-finite residual at component {index}")]
    NonFiniteResidual { index: usize },

    /// A class label was neither -1, 0 nor +1.
    #[error("invalid label {value} at row {row} (expected -1, 0 or +1)")]
    InvalidLabel { row: usize, value: f64 },

    /// A dataset or trace file failed to parse.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A dataset contained no rows.
    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    /// A solver or experiment configuration failed validation.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dim(context: &'static str, expected: usize, actual: usize) -> Self {
        Error::DimensionMismatch {
            context,
            expected,
            actual,
        }
    }
}
