//! Spectral stability of normal matrices: when A is normal, its eigenvalues
//! move by at most sqrt(m) times the Frobenius size of the perturbation,
//! measured in the least-squares matching. This module verifies that
//! inequality on concrete pairs and reports the margin.

use crate::error::{PerturbationError, Result};
use crate::pairing::{pair_spectra, Pairing, PairingMetric};
use crate::spectrum::{spectrum, CMat};

/// Outcome of testing the sqrt(m)-Frobenius displacement bound on a pair.
#[derive(Debug, Clone)]
pub struct NormalBoundReport {
    pub dimension: usize,
    /// Frobenius norm of A A^H - A^H A, the normality defect of the base.
    pub normality_defect: f64,
    /// sqrt of the minimal total squared eigenvalue displacement.
    pub spectral_shift: f64,
    /// sqrt(m) times the Frobenius norm of B - A.
    pub bound: f64,
    pub passed: bool,
    pub pairing: Pairing,
}

/// Check the displacement bound for a normal base matrix `a` and an
/// arbitrary comparison matrix `b`. Errors when `a` is not normal within
/// 1e-10 relative to its squared Frobenius norm, since the bound only holds
/// for normal bases.
pub fn check_normal_shift_bound(a: &CMat, b: &CMat) -> Result<NormalBoundReport> {
    if a.nrows() != a.ncols() || a.shape() != b.shape() {
        return Err(PerturbationError::DimensionMismatch(format!(
            "need equal square shapes, got {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let m = a.nrows();
    if m == 0 {
        return Err(PerturbationError::DimensionMismatch(
            "matrices must be nonempty".into(),
        ));
    }
    let commutator = a * a.adjoint() - a.adjoint() * a;
    let normality_defect = commutator.norm();
    let tol = 1e-10 * (a.norm() * a.norm()).max(f64::MIN_POSITIVE);
    if normality_defect > tol {
        return Err(PerturbationError::NotNormal {
            defect: normality_defect,
            tol,
        });
    }

    let lambda = spectrum(a);
    let mu = spectrum(b);
    let pairing = pair_spectra(&lambda, &mu, PairingMetric::Euclidean)?;
    let spectral_shift = pairing.total_cost;
    let bound = (m as f64).sqrt() * (b - a).norm();
    // Absolute slack absorbs eigensolver rounding; the inequality itself is
    // not sharp on generic inputs.
    let passed = spectral_shift <= bound + 1e-10;
    Ok(NormalBoundReport {
        dimension: m,
        normality_defect,
        spectral_shift,
        bound,
        passed,
        pairing,
    })
}
