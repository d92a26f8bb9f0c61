//! Error type for finite-volume spectra and density-of-states routines.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix dimension {dim} exceeds the dense-eigensolve cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("phase point has {got} coordinates, the operator family needs {need}")]
    PhaseMismatch { got: usize, need: usize },

    #[error("only {usable} scales clear the resolution floor, need at least 3")]
    InsufficientResolution { usable: usize },

    #[error("eigensolve failed: {0}")]
    Eigensolve(String),

    #[error(transparent)]
    Engine(#[from] cocycle_engine::EngineError),

    #[error(transparent)]
    Fourier(#[from] fourier_core::FourierError),
}

pub type Result<T> = std::result::Result<T, SpectralError>;
