use thiserror::Error;

/// Errors raised by the simulators and closed-form evaluators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A value cannot be represented, e.g. an eigenvalue below the underflow floor.
    #[error("range error: {0}")]
    Range(String),

    /// A series or iteration did not reach the requested accuracy.
    #[error("no convergence after {terms} terms (last term magnitude {last_term:e})")]
    NoConvergence { terms: usize, last_term: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
