use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("component {index} produced a non-finite value")]
    NonFiniteComponent { index: usize },

    #[error("empty batch")]
    EmptyBatch,

    #[error("batch index {index} out of range for {n} components")]
    BatchIndexOutOfRange { index: usize, n: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },

    #[error("chain diverged at step {step}")]
    Divergence { step: u64 },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("empty input")]
    Empty,

    #[error("exact assignment limited to {max} points, got {n}")]
    TooLarge { n: usize, max: usize },

    #[error("need at least {needed} positive points, found {found}")]
    TooFewPoints { needed: usize, found: usize },

    #[error("reflection direction is not a unit vector (norm {norm})")]
    NonUnitDirection { norm: f64 },
}

impl Error {
    pub fn invalid(name: &'static str, reason: &'static str) -> Self {
        Error::InvalidParameter { name, reason }
    }
}
