//! Quasi-periodic linear cocycles over torus translations.
//!
//! A cocycle is a pair (alpha, A) of a translation vector on the d-torus and
//! an analytic matrix-valued map A. The crate builds transfer cocycles for
//! block-tridiagonal operator families, iterates matrix products along orbits,
//! estimates Lyapunov spectra by repeated QR factorization, and conjugates
//! cocycles by analytic maps.

mod cocycle;
mod conjugate;
mod error;
mod lyapunov;
mod operator;

pub use cocycle::{CMat, Cocycle};
pub use conjugate::conjugate;
pub use error::{EngineError, Result};
pub use lyapunov::{
    group_multiplicities, log_det_average, lyapunov_spectrum, top_exponent_by_vector_growth,
    ExponentGroup, LyapunovSpectrum, SamplingProvenance,
};
pub use operator::{build_transfer, transfer_cocycle, OperatorFamily, OperatorSpec};
