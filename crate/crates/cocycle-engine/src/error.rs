use fourier_core::FourierError;
use thiserror::Error;

/// Errors from cocycle construction, iteration, and conjugation.
#[derive(Debug, Error)]
pub enum EngineError {
    #[error("cocycle matrix is singular on the torus: min |det A(x)| = {min_det:.3e}")]
    NotInvertible { min_det: f64 },

    #[error("leading hopping coefficient has magnitude {magnitude:.3e}, below 1e-12")]
    DegenerateHopping { magnitude: f64 },

    #[error("iteration lost finiteness at step {step}")]
    IterationOverflow { step: usize },

    #[error("conjugation is too ill-conditioned: condition estimate {cond:.3e}")]
    IllConditioned { cond: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Fourier(#[from] FourierError),
}

pub type Result<T> = std::result::Result<T, EngineError>;
