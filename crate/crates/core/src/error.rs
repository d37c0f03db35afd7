use thiserror::Error;

use crate::mixing::MixingReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("graph is not regular")]
    NotRegular,

    #[error("weights are not a mixing matrix (max violation {:.3e})", .0.max_violation)]
    NotMixing(MixingReport),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("configuration error: {message} (keys: {})", keys.join(", "))]
    Config { message: String, keys: Vec<String> },

    #[error("theorem premise violated: {0}")]
    TheoremPremise(String),

    #[error("malformed record: {0}")]
    Record(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(message: impl Into<String>, keys: Vec<String>) -> Self {
        Error::Config {
            message: message.into(),
            keys,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
