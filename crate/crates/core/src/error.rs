use thiserror::Error;

/// Errors produced by the collocation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A pivot of the SPD factorization fell below the acceptance threshold.
    #[error("factorization failed at pivot {index}: value {pivot:e} below threshold {threshold:e}")]
    Factorization {
        index: usize,
        pivot: f64,
        threshold: f64,
    },

    #[error("derivative order {order} not available for Wendland kernel with tau = {tau}")]
    KernelOrder { order: usize, tau: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("quadrature did not converge: error estimate {estimate:e} exceeds tolerance {tolerance:e}")]
    Quadrature { estimate: f64, tolerance: f64 },

    #[error("non-finite value encountered {context}")]
    NonFinite { context: String },

    #[error("path {path} aborted at step {step}: non-finite state")]
    PathAborted { path: usize, step: usize },

    #[error("{aborted} of {total} paths aborted (first: path {first_path} at step {first_step})")]
    TooManyAborts {
        aborted: usize,
        total: usize,
        first_path: usize,
        first_step: usize,
    },

    #[error("dimension mismatch: {0}")]
    Mismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
