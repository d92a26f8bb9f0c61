//! Worst-case eigenvalue sensitivity probe. A nilpotent Jordan block of
//! size m answers a corner perturbation of size delta with eigenvalues of
//! modulus delta^(1/m), so the log-log slope of displacement against delta
//! exposes the Holder exponent 1/m directly.

use num_complex::Complex64;

use crate::error::{PerturbationError, Result};
use crate::spectrum::{spectrum, CMat};

/// Measured response of a Jordan block to corner perturbations.
#[derive(Debug, Clone)]
pub struct CornerProbeReport {
    pub block_size: usize,
    pub deltas: Vec<f64>,
    /// Largest eigenvalue modulus after each perturbation (the unperturbed
    /// block is nilpotent, so this is the full displacement).
    pub displacements: Vec<f64>,
    /// Least-squares slope of ln(displacement) against ln(delta).
    pub slope: f64,
    pub expected_slope: f64,
}

/// Perturb the bottom-left corner of the size-m nilpotent Jordan block by
/// each delta and fit the displacement growth law.
pub fn jordan_corner_probe(block_size: usize, deltas: &[f64]) -> Result<CornerProbeReport> {
    if block_size == 0 {
        return Err(PerturbationError::InvalidParameter(
            "block size must be positive".into(),
        ));
    }
    if deltas.len() < 3 {
        return Err(PerturbationError::InvalidParameter(
            "need at least three perturbation sizes to fit a slope".into(),
        ));
    }
    if deltas.iter().any(|&d| !(d > 0.0) || !d.is_finite()) {
        return Err(PerturbationError::InvalidParameter(
            "perturbation sizes must be positive and finite".into(),
        ));
    }
    let lo = deltas.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = deltas.iter().cloned().fold(0.0_f64, f64::max);
    if hi / lo < 1e4 {
        return Err(PerturbationError::InvalidParameter(format!(
            "perturbation sizes must span at least four decades, got {lo:.2e}..{hi:.2e}"
        )));
    }

    let m = block_size;
    let mut displacements = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let mut j = CMat::zeros(m, m);
        for i in 0..m - 1 {
            j[(i, i + 1)] = Complex64::ONE;
        }
        j[(m - 1, 0)] += Complex64::new(delta, 0.0);
        let displacement = spectrum(&j)
            .into_iter()
            .map(|z| z.norm())
            .fold(0.0_f64, f64::max);
        displacements.push(displacement);
    }

    let xs: Vec<f64> = deltas.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = displacements.iter().map(|d| d.ln()).collect();
    let slope = least_squares_slope(&xs, &ys)?;
    Ok(CornerProbeReport {
        block_size: m,
        deltas: deltas.to_vec(),
        displacements,
        slope,
        expected_slope: 1.0 / m as f64,
    })
}

/// Slope of the least-squares line through (xs, ys).
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(PerturbationError::InvalidParameter(
            "slope fit needs two equally long samples of length at least 2".into(),
        ));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= 0.0 {
        return Err(PerturbationError::InvalidParameter(
            "slope fit needs at least two distinct abscissae".into(),
        ));
    }
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dyadic_deltas() -> Vec<f64> {
        (0..7).map(|k| 1e-8 * 10f64.powi(k)).collect()
    }

    #[test]
    fn corner_response_is_exactly_the_m_th_root() {
        let report = jordan_corner_probe(2, &[1e-6]).err();
        assert!(report.is_some(), "single delta cannot fit a slope");
        let report = jordan_corner_probe(2, &[1e-6, 1e-4]).err();
        assert!(report.is_some(), "two decades are too narrow for a fit");
        let report = jordan_corner_probe(2, &[1e-8, 1e-6, 1e-4]).unwrap();
        // Characteristic polynomial is z^2 - delta, so |z| = sqrt(delta).
        assert!((report.displacements[0] - 1e-4).abs() < 1e-13);
        assert!((report.displacements[1] - 1e-3).abs() < 1e-12);
        assert!((report.displacements[2] - 1e-2).abs() < 1e-11);
    }

    #[test]
    fn slopes_recover_the_reciprocal_block_size() {
        for m in 1..=4usize {
            let report = jordan_corner_probe(m, &dyadic_deltas()).unwrap();
            let expected = 1.0 / m as f64;
            assert!(
                (report.slope - expected).abs() < 0.02,
                "block size {m}: slope {} vs expected {expected}",
                report.slope
            );
        }
    }

    #[test]
    fn trivial_block_responds_linearly() {
        let report = jordan_corner_probe(1, &[1e-7, 1e-5, 1e-3]).unwrap();
        assert!((report.displacements[0] - 1e-7).abs() < 1e-20);
        assert!((report.slope - 1.0).abs() < 1e-10);
    }
}
