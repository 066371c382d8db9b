use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("level cap k_max = {k_max} truncates occupied level {level}")]
    LevelCapExceeded { k_max: usize, level: usize },

    #[error("time {0} was not sampled")]
    NotSampled(f64),

    #[error("time {t} exceeds the log horizon {horizon}")]
    BeyondHorizon { t: f64, horizon: f64 },

    #[error("configuration has {found} servers, expected {expected}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("need at least {needed} replications, got {got}")]
    InsufficientReplications { needed: usize, got: usize },

    #[error("horizon too short: need {needed}, got {got}")]
    HorizonTooShort { needed: f64, got: f64 },

    #[error("distribution is not normalized: total mass {0}")]
    NotNormalized(f64),

    #[error("non-positive value {value} at position {index}")]
    NonPositive { index: usize, value: f64 },
}

impl Error {
    pub fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
