//! Two-sided evaluation of the generalized Thouless formula.
//!
//! The left side sums the nonnegative half of the transfer-cocycle Lyapunov
//! spectrum and adds the log magnitude of the leading hopping coefficient;
//! the right side is the logarithmic potential of the finite-volume spectral
//! measure, the phase-averaged mean of ln |E - E_j| over eigenvalues. The two
//! agree in the infinite-volume limit; the gap is the numerical check.

use cocycle_engine::{lyapunov_spectrum, transfer_cocycle, OperatorFamily, OperatorSpec};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, SpectralError};
use crate::ids::phase_points;
use crate::volume::{assemble_finite_volume, phase_dim};

/// Distance floor keeping exact eigenvalue collisions out of the logarithm.
const LOG_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct ThoulessReport {
    pub energy: f64,
    /// Sum of the nonnegative Lyapunov exponents plus ln of the leading
    /// hopping magnitude.
    pub lhs: f64,
    /// Log-potential of the finite-volume eigenvalue distribution.
    pub rhs: f64,
    pub gap: f64,
    pub box_radius: i64,
    pub n_iters: usize,
}

/// Evaluate both sides of the Thouless formula on a set of energies,
/// reusing the finite-volume eigenvalues across energies.
pub fn thouless_scan(
    spec: &OperatorSpec,
    energies: &[f64],
    box_radius: i64,
    phase_samples: usize,
    n_iters: usize,
    seed: Option<u64>,
) -> Result<Vec<ThoulessReport>> {
    if energies.is_empty() {
        return Err(SpectralError::InvalidParameter(
            "energy list is empty".into(),
        ));
    }
    let m = spec.half_bandwidth() as usize;
    let lead = spec.hopping().coeff(&[m as i64]).norm();

    let phases = phase_points(
        phase_dim(spec, OperatorFamily::FiniteRange),
        phase_samples,
        seed,
    );
    let spectra: Vec<Vec<f64>> = phases
        .par_iter()
        .map(|x| {
            assemble_finite_volume(spec, OperatorFamily::FiniteRange, box_radius, x)?
                .eigenvalues()
        })
        .collect::<Result<_>>()?;

    energies
        .iter()
        .map(|&e| {
            let cocycle = transfer_cocycle(spec, e)?;
            let spectrum = lyapunov_spectrum(&cocycle, n_iters, phase_samples, seed)?;
            let lhs: f64 = spectrum.values[..m].iter().sum::<f64>() + lead.ln();

            let rhs = spectra
                .iter()
                .map(|eigs| {
                    eigs.iter()
                        .map(|ej| (e - ej).abs().max(LOG_CLAMP).ln())
                        .sum::<f64>()
                        / eigs.len() as f64
                })
                .sum::<f64>()
                / spectra.len() as f64;

            Ok(ThoulessReport {
                energy: e,
                lhs,
                rhs,
                gap: lhs - rhs,
                box_radius,
                n_iters,
            })
        })
        .collect()
}

/// Single-energy version of the scan.
pub fn thouless_check(
    spec: &OperatorSpec,
    energy: f64,
    box_radius: i64,
    phase_samples: usize,
    n_iters: usize,
    seed: Option<u64>,
) -> Result<ThoulessReport> {
    Ok(thouless_scan(spec, &[energy], box_radius, phase_samples, n_iters, seed)?.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use fourier_core::{FrequencyVector, TrigPolynomial};

    fn amo_spec(lambda_inv: f64) -> OperatorSpec {
        OperatorSpec::new(
            TrigPolynomial::cosine(),
            TrigPolynomial::cosine().to_map(0.05).unwrap(),
            lambda_inv,
            if lambda_inv > 0.0 { 1.0 / lambda_inv } else { 1.0 },
            FrequencyVector::golden_mean(),
        )
        .unwrap()
    }

    /// Midpoint quadrature of the free-case log potential over the band.
    fn free_log_potential(e: f64) -> f64 {
        let n = 2_000_000;
        (0..n)
            .map(|k| {
                let theta = (k as f64 + 0.5) / n as f64;
                (e - 2.0 * (std::f64::consts::TAU * theta).cos()).abs().ln()
            })
            .sum::<f64>()
            / n as f64
    }

    #[test]
    fn free_case_off_the_band_matches_the_closed_form() {
        // At E=3 the integral of ln|E - 2cos| is ln((3 + sqrt 5)/2).
        let expected = ((3.0 + 5.0_f64.sqrt()) / 2.0).ln();
        let quad = free_log_potential(3.0);
        assert!(
            (quad - expected).abs() < 1e-6,
            "quadrature {quad} vs closed form {expected}"
        );
        let report = thouless_check(&amo_spec(0.0), 3.0, 400, 2, 8_000, None).unwrap();
        assert!(
            (report.rhs - expected).abs() < 0.02,
            "rhs {} vs closed form {expected}",
            report.rhs
        );
        assert!(
            report.gap.abs() < 0.02,
            "free-case gap {} above tolerance",
            report.gap
        );
    }

    #[test]
    fn free_case_at_band_center_has_zero_exponent_side() {
        let report = thouless_check(&amo_spec(0.0), 0.0, 200, 2, 4_000, None).unwrap();
        assert!(
            report.lhs.abs() < 1e-8,
            "free lhs at band center is {}, expected 0",
            report.lhs
        );
    }

    #[test]
    fn coupled_scan_is_self_consistent() {
        let spec = amo_spec(1.0 / 3.0);
        let reports = thouless_scan(&spec, &[-1.1, 0.4], 400, 2, 10_000, None).unwrap();
        for r in &reports {
            assert!(
                r.gap.abs() <= 0.05,
                "Thouless gap {} at energy {} above tolerance",
                r.gap,
                r.energy
            );
        }
    }

    #[test]
    fn empty_energy_list_is_rejected() {
        let err = thouless_scan(&amo_spec(0.0), &[], 100, 1, 100, None);
        assert!(matches!(err, Err(SpectralError::InvalidParameter(_))));
    }
}
