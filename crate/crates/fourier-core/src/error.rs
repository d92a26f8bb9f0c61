use num_complex::Complex64;
use thiserror::Error;

/// Errors from coefficient-space arithmetic and the pointwise matrix calculus.
#[derive(Debug, Clone, Error)]
pub enum FourierError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("evaluation point has |Im x| = {imag} outside the analyticity strip h = {strip}")]
    StripExceeded { imag: f64, strip: f64 },

    #[error("matrix logarithm branch failure: eigenvalue {eigenvalue} within {distance:.3e} of the closed negative real axis")]
    NonPrincipalBranch {
        eigenvalue: Complex64,
        distance: f64,
    },

    #[error("series for log(I + D) requires a contraction; got coefficient norm {norm}")]
    SeriesDiverged { norm: f64 },

    #[error("non-finite value produced in {0}")]
    NotFinite(String),

    #[error("mode index has max component {n_inf} beyond declared radius {radius}")]
    RadiusExceeded { n_inf: i64, radius: i64 },

    #[error("conjugate-symmetry defect {defect:.3e} too large for a real-valued polynomial")]
    SymmetryDefect { defect: f64 },

    #[error("iteration failed to converge: {0}")]
    NoConvergence(String),
}

pub type Result<T> = std::result::Result<T, FourierError>;
