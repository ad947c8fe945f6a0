use thiserror::Error;

/// Errors produced by the analysis and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("mode chain is not irreducible: {0}")]
    NotErgodic(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("predicate `{predicate}` is not monotone in demand: holds at {holds_at} but fails at {fails_at}")]
    NonMonotone {
        predicate: &'static str,
        holds_at: f64,
        fails_at: f64,
    },

    #[error("Lyapunov certificate invalid: c = {0} is not positive")]
    CertificateInvalid(f64),

    #[error("inconsistent result: {0}")]
    Inconsistent(String),
}

pub type Result<T> = std::result::Result<T, Error>;
