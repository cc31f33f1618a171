use thiserror::Error;

/// Errors raised by the numerical kernels and set algebra.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no convergence: {0}")]
    Convergence(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// The tail certificate does not separate the searched maximum from the
    /// unexamined eigenvalues.
    #[error("inconclusive norm estimate: tail bound {tail_bound:e} >= value {value:e}")]
    Inconclusive { value: f64, tail_bound: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
