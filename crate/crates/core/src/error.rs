use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("all triples filtered")]
    AllFiltered,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parameter tables need {required} bytes, over the {budget} byte memory budget")]
    MemoryBudget { required: u128, budget: u64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unknown resource id {0}")]
    UnknownResource(usize),

    #[error("degenerate posterior at {0}")]
    DegeneratePosterior(String),

    #[error("resource {0} has no support")]
    NoSupport(usize),

    #[error("distribution length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("model file line {line}: {reason}")]
    Format { line: usize, reason: String },

    #[error("invalid planted spec: {0}")]
    InvalidSpec(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// True for failures caused by vanishing probabilities rather than bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::DegeneratePosterior(_) | Error::NoSupport(_))
    }

    pub(crate) fn format(line: usize, reason: impl Into<String>) -> Self {
        Error::Format {
            line,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
