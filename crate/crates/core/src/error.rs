use thiserror::Error;

/// Errors raised by the numerical and sampling routines.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical procedure failed to reach its tolerance.
    #[error("numeric error: {message} (error estimate {estimate:e})")]
    Numeric { message: String, estimate: f64 },

    /// Two resolutions of the same computation disagree.
    #[error("resolution disagreement: {primary} vs {check} (tolerance {tolerance:e})")]
    Disagreement {
        primary: f64,
        check: f64,
        tolerance: f64,
    },

    /// The model does not support the requested operation.
    #[error("unsupported model: {0}")]
    Unsupported(String),

    /// A caller-side precondition was violated.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A rejection sampler exhausted its trial budget.
    #[error("sampling error: {0}")]
    Sampling(String),

    /// Invalid run configuration.
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn numeric(message: impl Into<String>, estimate: f64) -> Self {
        Error::Numeric {
            message: message.into(),
            estimate,
        }
    }

    pub(crate) fn domain(message: impl Into<String>) -> Self {
        Error::Domain(message.into())
    }
}
