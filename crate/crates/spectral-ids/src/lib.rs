//! Finite-volume spectra and the integrated density of states for
//! quasi-periodic operators.
//!
//! The crate truncates the dual operator families to finite boxes, counts
//! eigenvalues to build IDS curves, evaluates both sides of the Thouless
//! formula, checks the duality between a family and its Fourier transform,
//! fits local Hölder exponents to IDS curves, and classifies the level sets
//! of the hopping symbol to predict those exponents.

mod error;
mod holder;
mod ids;
mod levelset;
mod thouless;
mod volume;

pub use error::{Result, SpectralError};
pub use holder::{holder_fit, HolderFit};
pub use ids::{duality_check, ids_curve, DualityReport, IdsCurve};
pub use levelset::{
    gap_parameter, level_set_classify, predicted_holder, HolderPrediction, LevelSetReport,
};
pub use thouless::{thouless_check, thouless_scan, ThoulessReport};
pub use volume::{assemble_finite_volume, volume_dim, FiniteVolume, DENSE_DIM_CAP};
