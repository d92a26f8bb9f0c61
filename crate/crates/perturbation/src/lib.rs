//! Eigenvalue perturbation analysis: optimal spectrum matching, the
//! sqrt(m)-Frobenius displacement bound for normal matrices, and a Jordan
//! block probe that measures the 1/m Holder response of defective spectra.

mod assignment;
mod error;
mod normal;
mod pairing;
mod probe;
mod spectrum;

pub use assignment::{assignment_cost, min_cost_assignment};
pub use error::{PerturbationError, Result};
pub use normal::{check_normal_shift_bound, NormalBoundReport};
pub use pairing::{pair_spectra, Pairing, PairingMetric};
pub use probe::{jordan_corner_probe, least_squares_slope, CornerProbeReport};
pub use spectrum::{spectrum, CMat};
