//! Error type for the almost-reducibility scheme.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum KamError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("constant part is singular or nearly so: {0}")]
    Singular(String),

    #[error("eigenvalue computation failed: {0}")]
    Eigensolve(String),

    #[error(
        "block coupling solve is ill-conditioned: eigenvalue gap {gap:.3e} between \
         groups {first} and {second} is below 1e-12"
    )]
    SylvesterConditioning { first: usize, second: usize, gap: f64 },

    #[error(
        "homological solve for block pair ({k},{l}) at mode {n:?} left relative \
         residual {residual:.3e} above 1e-8; the denominators are too small for \
         this elimination threshold"
    )]
    HomologicalConditioning {
        k: usize,
        l: usize,
        n: Vec<i64>,
        residual: f64,
    },

    #[error(
        "all {windows} resonance windows are occupied; lower the resonance \
         threshold or shrink the mode cutoff"
    )]
    WindowsExhausted { windows: usize },

    #[error(
        "resonance sites are cyclically inconsistent at pair ({k},{l}): path sum \
         {expected:?} disagrees with site {found:?}"
    )]
    CycleInconsistency {
        k: usize,
        l: usize,
        expected: Vec<i64>,
        found: Vec<i64>,
    },

    #[error(
        "perturbation too large for the elimination gate: sqrt(masked norm) \
         {actual:.3e} exceeds {allowed:.3e}"
    )]
    GateFailed { actual: f64, allowed: f64 },

    #[error(
        "elimination stopped contracting after {sweeps} sweeps (masked norm \
         {norm:.3e}); the perturbation is too large for this spectral gap"
    )]
    NoContraction { sweeps: usize, norm: f64 },

    #[error(
        "conjugacy residual {residual:.3e} at step {step} exceeds the allowed \
         {allowed:.3e}; the step was rejected"
    )]
    ResidualExceeded {
        step: usize,
        residual: f64,
        allowed: f64,
    },

    #[error("grouping could not reach an acceptable conditioning below gap {gap:.3e}")]
    GroupingConditioning { gap: f64 },

    #[error("iteration has not converged: perturbation norm {norm:.3e} above {tol:.3e}")]
    NotConverged { norm: f64, tol: f64 },

    #[error(transparent)]
    Fourier(#[from] fourier_core::FourierError),

    #[error(transparent)]
    Perturbation(#[from] perturbation::PerturbationError),
}

pub type Result<T> = std::result::Result<T, KamError>;
