//! Error types shared across the crate.

use thiserror::Error;

/// Validation failures raised by the scoring core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpeError {
    #[error("non-finite value for `{field}`: {value}")]
    NonFinite { field: &'static str, value: f64 },

    #[error("`{field}` must lie in [0, 1], got {value}")]
    OutOfUnitRange { field: &'static str, value: f64 },

    #[error("epsilon must be positive and finite, got {0}")]
    InvalidEpsilon(f64),
}

/// Failures while reading or joining datasets.
#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("line {line}: field `{field}`: {message}")]
    Field {
        line: usize,
        field: String,
        message: String,
    },

    #[error("line {line}: {message}")]
    Line { line: usize, message: String },

    #[error("line {line}: duplicate image_id `{image_id}`")]
    DuplicateId { line: usize, image_id: String },

    #[error("label file header must be `image_id,label`, got `{0}`")]
    BadHeader(String),

    #[error("no samples left after joining records with labels")]
    EmptyJoin,

    #[error("fixture count must be at least 1, got {0}")]
    InvalidCount(usize),

    #[error(transparent)]
    Spe(#[from] SpeError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Failures in the evaluation statistics (metrics, EDC, histogram, charts).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("no samples to evaluate")]
    Empty,

    #[error("at least {required} samples are needed, got {got}")]
    TooFewSamples { required: usize, got: usize },

    #[error("non-finite {what} for sample `{image_id}`")]
    NonFinite {
        what: &'static str,
        image_id: String,
    },

    #[error("threshold must lie in [0, 1], got {0}")]
    InvalidThreshold(f64),

    #[error("bin width must lie in (0, 1], got {0}")]
    InvalidBinWidth(f64),
}

pub type Result<T, E = SpeError> = std::result::Result<T, E>;
