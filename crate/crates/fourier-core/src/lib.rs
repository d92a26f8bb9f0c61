//! Core types for analytic matrix-valued functions on the torus: frequency
//! vectors with Diophantine checks, matrix trigonometric series with weighted
//! coefficient norms, scalar trigonometric polynomials, and exponential and
//! logarithm calculus for maps close to constants.

mod calculus;
mod error;
mod frequency;
mod map;
mod matfn;
mod trig;

pub use calculus::{
    expm1_series, log1p_series, matrix_exp_map, matrix_log_map, project_function,
    ProjectionReport,
};
pub use error::{FourierError, Result};
pub use frequency::{
    check_diophantine, dist_to_integers, enumerate_modes, l1_norm, linf_norm, DiophantineParams,
    DiophantineReport, FrequencyVector,
};
pub use map::{CMat, FourierMap};
pub use matfn::{
    check_log_branch, eigenvalues, log1p_taylor, mat_exp, mat_expm1, mat_sqrt, op_norm,
    principal_log,
};
pub use trig::TrigPolynomial;
