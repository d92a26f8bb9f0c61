use thiserror::Error;

#[derive(Debug, Error)]
pub enum PerturbationError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not normal: commutator defect {defect:.3e} exceeds {tol:.3e}")]
    NotNormal { defect: f64, tol: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, PerturbationError>;
