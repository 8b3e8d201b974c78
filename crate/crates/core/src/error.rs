use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("singular metric at {point:?}: {detail}")]
    Singular { point: Vec<f64>, detail: String },

    #[error("parse error at byte offset {offset}: {message}")]
    Parse { offset: u64, message: String },

    #[error("non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },

    #[error("insufficient data: need at least {needed} finite points, found {found}")]
    InsufficientData { needed: usize, found: usize },

    #[error("finite-difference step {step:e} underflows at scale {scale:e}")]
    StepUnderflow { step: f64, scale: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn dim(what: &'static str, expected: usize, found: usize) -> Self {
        Error::Dimension { what, expected, found }
    }
}
