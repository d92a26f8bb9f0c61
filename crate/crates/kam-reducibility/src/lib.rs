//! Quantitative almost-reducibility for analytic quasi-periodic cocycles.
//!
//! The iteration conjugates a cocycle A e^f with small analytic f toward a
//! constant cocycle. Each step block-diagonalizes the constant part along
//! eigenvalue clusters, removes every non-resonant Fourier mode of the
//! perturbation through a quadratically convergent homological fixed point,
//! renormalizes the resonant modes with an integer torus rotation, and
//! absorbs the constant remainder into the new constant part. On success
//! the perturbation norm decays super-quadratically down to machine
//! precision while an explicit analytic conjugation B is accumulated, so
//! every state can be verified pointwise against the original cocycle.
//!
//! The driver records per-step diagnostics: thresholds, spectral groupings,
//! resonant sites, rotation vectors, elimination sweeps, phase drift, and
//! conjugacy residuals. Failures (perturbation too large for the gate, lost
//! contraction, exhausted resonance windows) are reported as values rather
//! than panics, with the partial trace preserved.

mod blocks;
mod elimination;
mod error;
mod homological;
mod iterate;
mod phase;
mod resonance;
mod rotation;
mod schedule;
mod step;

pub use blocks::{block_diagonalize, BlockStructure};
pub use elimination::{masked_norm0, remove_nonresonant, EliminationReport};
pub use error::{KamError, Result};
pub use homological::{growth_lower_bound, solve_homological, SolveReport};
pub use iterate::{kam_iterate, lyapunov_from_phases, KamTrace, StepRecord};
pub use phase::{eigenphases, EigenPhase};
pub use resonance::{scan_resonances, EliminationMask, ResonanceScan, ResonanceSite};
pub use rotation::{apply_rotation, build_rotation, rotation_map};
pub use schedule::{KamParams, KamSchedule};
pub use step::{conjugacy_residual, det_average, kam_step, KamState, StepDiagnostics};
