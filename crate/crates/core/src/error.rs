use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("time {t} exceeds the Bernstein horizon {upsilon}")]
    Horizon { t: f64, upsilon: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("Kendall's tau {tau} is not attainable by {family} (range [{lo}, {hi}])")]
    UnattainableTau {
        family: String,
        tau: f64,
        lo: f64,
        hi: f64,
    },

    #[error("non-finite log-likelihood contribution at cluster {cluster}")]
    NonFinite { cluster: usize },

    #[error("no sign change in bracket [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("root search did not converge after {iterations} iterations")]
    RootNotConverged { iterations: usize },

    #[error("models are not nested: {0}")]
    NotNested(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
