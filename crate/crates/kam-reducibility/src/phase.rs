//! Eigenphases of constant cocycle matrices.
//!
//! An eigenvalue mu of the constant part is encoded as the phase rho with
//! mu = e^{-2 pi i rho}. The real part lives on the circle R/Z and is
//! normalized to [0, 1); the imaginary part ln|mu| / (2 pi) carries the
//! exponential growth rate, so 2 pi Im rho is a Lyapunov exponent once the
//! iteration has converged.

use fourier_core::{dist_to_integers, CMat};
use nalgebra::Schur;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{KamError, Result};

const TAU: f64 = std::f64::consts::TAU;

/// One eigenphase, with Re rho in [0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenPhase {
    pub rho: Complex64,
}

impl EigenPhase {
    /// Phase of a nonzero eigenvalue: Re rho = -arg(mu)/(2 pi) mod 1,
    /// Im rho = ln|mu| / (2 pi).
    pub fn from_eigenvalue(mu: Complex64) -> Result<Self> {
        if !mu.re.is_finite() || !mu.im.is_finite() || mu.norm() == 0.0 {
            return Err(KamError::InvalidParameter(format!(
                "eigenvalue {mu} has no phase"
            )));
        }
        let re = (-mu.arg() / TAU).rem_euclid(1.0);
        let im = mu.norm().ln() / TAU;
        Ok(Self {
            rho: Complex64::new(re, im),
        })
    }

    /// The eigenvalue e^{-2 pi i rho} this phase encodes.
    pub fn eigenvalue(&self) -> Complex64 {
        Complex64::from_polar((TAU * self.rho.im).exp(), -TAU * self.rho.re)
    }

    /// Cylinder distance: real parts compared modulo 1, imaginary parts on
    /// the line.
    pub fn distance(&self, other: &Self) -> f64 {
        dist_to_integers(self.rho.re - other.rho.re) + (self.rho.im - other.rho.im).abs()
    }

    /// Phase shifted by a real amount t, so the eigenvalue picks up the
    /// factor e^{-2 pi i t}.
    pub fn translated(&self, t: f64) -> Self {
        Self {
            rho: Complex64::new((self.rho.re + t).rem_euclid(1.0), self.rho.im),
        }
    }
}

/// Bounded-iteration complex Schur form. Falls back to a random unitary
/// change of basis when the plain form stalls, which unsticks the rare
/// shift patterns that cycle.
pub(crate) fn schur_form(a: &CMat) -> Result<(CMat, CMat)> {
    if let Some(schur) = Schur::try_new(a.clone(), f64::EPSILON, 100_000) {
        let (q, t) = schur.unpack();
        return Ok((q, t));
    }
    let m = a.nrows();
    for trial in 0..8u64 {
        let g = random_unitary(m, 0x5eed_0a11 ^ trial);
        let rotated = &g * a * g.adjoint();
        if let Some(schur) = Schur::try_new(rotated, f64::EPSILON, 100_000) {
            let (q, t) = schur.unpack();
            return Ok((&g.adjoint() * &q, t));
        }
    }
    Err(KamError::Eigensolve(format!(
        "Schur iteration failed to converge on a {m} x {m} matrix"
    )))
}

fn random_unitary(m: usize, seed: u64) -> CMat {
    // Splitmix-style stream feeding a Gram-Schmidt orthonormalization.
    let mut state = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(1);
    let mut next = move || {
        state = state
            .wrapping_mul(0x5851_f42d_4c95_7f2d)
            .wrapping_add(0x1405_7b7e_f767_814f);
        let bits = (state >> 11) as f64 / (1u64 << 53) as f64;
        2.0 * bits - 1.0
    };
    let raw = CMat::from_fn(m, m, |_, _| Complex64::new(next(), next()));
    let qr = raw.qr();
    let q = qr.q();
    // QR of a generic matrix is unitary; guard against a degenerate draw.
    if q.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        CMat::identity(m, m)
    } else {
        q
    }
}

/// Eigenphases of a constant matrix, sorted by descending growth rate and
/// ascending angle so repeated calls agree.
pub fn eigenphases(a: &CMat) -> Result<Vec<EigenPhase>> {
    if a.nrows() != a.ncols() {
        return Err(KamError::InvalidParameter(
            "eigenphases need a square matrix".into(),
        ));
    }
    let (_, t) = schur_form(a)?;
    let mut phases = (0..t.nrows())
        .map(|i| EigenPhase::from_eigenvalue(t[(i, i)]))
        .collect::<Result<Vec<_>>>()?;
    phases.sort_by(|p, q| {
        q.rho
            .im
            .partial_cmp(&p.rho.im)
            .unwrap()
            .then(p.rho.re.partial_cmp(&q.rho.re).unwrap())
    });
    Ok(phases)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_round_trips_through_eigenvalue() {
        let samples = [
            Complex64::new(2.0, 0.0),
            Complex64::new(0.0, -0.5),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.3, 0.4),
            Complex64::from_polar(1.0, 2.0),
        ];
        for mu in samples {
            let phase = EigenPhase::from_eigenvalue(mu).unwrap();
            assert!(
                (phase.eigenvalue() - mu).norm() < 1e-10,
                "reconstruction drifted for {mu}"
            );
            assert!((0.0..1.0).contains(&phase.rho.re));
        }
    }

    #[test]
    fn zero_eigenvalue_is_rejected() {
        assert!(EigenPhase::from_eigenvalue(Complex64::ZERO).is_err());
    }

    #[test]
    fn distance_wraps_the_real_part() {
        let p = EigenPhase {
            rho: Complex64::new(0.95, 0.2),
        };
        let q = EigenPhase {
            rho: Complex64::new(0.05, -0.1),
        };
        assert!((p.distance(&q) - (0.1 + 0.3)).abs() < 1e-14);
    }

    #[test]
    fn unimodular_eigenvalue_has_real_phase() {
        let mu = Complex64::from_polar(1.0, -1.234);
        let phase = EigenPhase::from_eigenvalue(mu).unwrap();
        assert!(phase.rho.im.abs() < 1e-15);
    }

    #[test]
    fn eigenphases_of_diagonal_matrix() {
        let a = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(2.0, 0.0),
            Complex64::new(0.5, 0.0),
        ]));
        let phases = eigenphases(&a).unwrap();
        let ln2 = std::f64::consts::LN_2;
        assert!((phases[0].rho.im - ln2 / TAU).abs() < 1e-14);
        assert!((phases[1].rho.im + ln2 / TAU).abs() < 1e-14);
    }

    #[test]
    fn translation_shifts_the_eigenvalue_angle() {
        let phase = EigenPhase {
            rho: Complex64::new(0.8, 0.1),
        };
        let shifted = phase.translated(0.35);
        assert!((shifted.rho.re - 0.15).abs() < 1e-14);
        let expected = phase.eigenvalue() * Complex64::from_polar(1.0, -TAU * 0.35);
        assert!((shifted.eigenvalue() - expected).norm() < 1e-12);
    }
}
