//! Scalar real-valued trigonometric polynomials on the d-torus. These carry
//! the sampling functions (potentials, hopping symbols) that drive the
//! operator families, so construction enforces the coefficient symmetry
//! c(-n) = conj(c(n)) that makes the values real.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{FourierError, Result};
use crate::frequency::l1_norm;
use crate::map::{CMat, FourierMap};

const TAU: f64 = std::f64::consts::TAU;

/// Real trigonometric polynomial x -> sum_n c(n) e^{2 pi i <n, x>} with
/// c(-n) = conj(c(n)).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "TrigRepr", into = "TrigRepr")]
pub struct TrigPolynomial {
    d: usize,
    coeffs: BTreeMap<Vec<i64>, Complex64>,
}

impl TrigPolynomial {
    /// Build from coefficients, rejecting any that break the real-valuedness
    /// symmetry by more than 1e-12 relative to the largest coefficient.
    pub fn new(d: usize, coeffs: BTreeMap<Vec<i64>, Complex64>) -> Result<Self> {
        if d == 0 {
            return Err(FourierError::InvalidParameter(
                "torus dimension must be positive".into(),
            ));
        }
        let mut scale = 0.0_f64;
        for (n, c) in &coeffs {
            if n.len() != d {
                return Err(FourierError::DimensionMismatch(format!(
                    "mode {:?} has {} components, torus dimension is {}",
                    n,
                    n.len(),
                    d
                )));
            }
            if !c.re.is_finite() || !c.im.is_finite() {
                return Err(FourierError::NotFinite(format!(
                    "coefficient at mode {n:?} is not finite"
                )));
            }
            scale = scale.max(c.norm());
        }
        let tol = 1e-12 * scale.max(1.0);
        let mut defect = 0.0_f64;
        for (n, c) in &coeffs {
            let neg: Vec<i64> = n.iter().map(|&v| -v).collect();
            let mirror = coeffs.get(&neg).copied().unwrap_or(Complex64::ZERO);
            defect = defect.max((c.conj() - mirror).norm());
        }
        if defect > tol {
            return Err(FourierError::SymmetryDefect { defect });
        }
        let coeffs: BTreeMap<_, _> = coeffs.into_iter().filter(|(_, c)| c.norm() > 0.0).collect();
        Ok(Self { d, coeffs })
    }

    /// Symmetrize first, then build: each pair (n, -n) is replaced by its
    /// Hermitian average, so the result is always real-valued.
    pub fn symmetrized(d: usize, coeffs: BTreeMap<Vec<i64>, Complex64>) -> Result<Self> {
        let mut fixed: BTreeMap<Vec<i64>, Complex64> = BTreeMap::new();
        for (n, c) in &coeffs {
            let neg: Vec<i64> = n.iter().map(|&v| -v).collect();
            let mirror = coeffs.get(&neg).copied().unwrap_or(Complex64::ZERO);
            fixed.insert(n.clone(), (c + mirror.conj()) * 0.5);
            if !coeffs.contains_key(&neg) {
                fixed.insert(neg, (c.conj() + mirror) * 0.5);
            }
        }
        Self::new(d, fixed)
    }

    /// The one-dimensional sampling function 2 cos(2 pi x).
    pub fn cosine() -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(vec![1], Complex64::ONE);
        coeffs.insert(vec![-1], Complex64::ONE);
        Self { d: 1, coeffs }
    }

    /// Constant polynomial.
    pub fn constant(d: usize, value: f64) -> Self {
        let mut coeffs = BTreeMap::new();
        if value != 0.0 {
            coeffs.insert(vec![0; d], Complex64::new(value, 0.0));
        }
        Self { d, coeffs }
    }

    pub fn torus_dim(&self) -> usize {
        self.d
    }

    /// Largest l1 mode length with a nonzero coefficient.
    pub fn degree(&self) -> i64 {
        self.coeffs.keys().map(|n| l1_norm(n)).max().unwrap_or(0)
    }

    pub fn coeff(&self, n: &[i64]) -> Complex64 {
        self.coeffs.get(n).copied().unwrap_or(Complex64::ZERO)
    }

    pub fn modes(&self) -> impl Iterator<Item = (&[i64], Complex64)> {
        self.coeffs.iter().map(|(n, &c)| (n.as_slice(), c))
    }

    /// Value at a real point (imaginary residue is discarded; it is zero up
    /// to rounding by the coefficient symmetry).
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.d, "point dimension must match torus dimension");
        let mut acc = Complex64::ZERO;
        for (n, c) in &self.coeffs {
            let phase: f64 = n.iter().zip(x).map(|(&ni, &xi)| ni as f64 * xi).sum();
            acc += c * Complex64::from_polar(1.0, TAU * phase);
        }
        acc.re
    }

    /// Laurent evaluation sum_k c(k) z^k for one-dimensional polynomials,
    /// the analytic symbol behind the level-set analysis.
    pub fn evaluate_laurent(&self, z: Complex64) -> Result<Complex64> {
        if self.d != 1 {
            return Err(FourierError::InvalidParameter(format!(
                "Laurent evaluation needs a one-variable polynomial, torus dimension is {}",
                self.d
            )));
        }
        if z.norm() == 0.0 {
            return Err(FourierError::InvalidParameter(
                "Laurent evaluation at z = 0 is undefined for negative modes".into(),
            ));
        }
        let mut acc = Complex64::ZERO;
        for (n, c) in &self.coeffs {
            acc += c * z.powi(n[0] as i32);
        }
        Ok(acc)
    }

    /// Minimum and maximum over a uniform grid with the given number of
    /// points per coordinate.
    pub fn range_on_grid(&self, points_per_dim: usize) -> (f64, f64) {
        assert!(points_per_dim > 0, "grid must contain at least one point");
        let total = points_per_dim.pow(self.d as u32);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut x = vec![0.0; self.d];
        for flat in 0..total {
            let mut rest = flat;
            for xi in x.iter_mut() {
                *xi = (rest % points_per_dim) as f64 / points_per_dim as f64;
                rest /= points_per_dim;
            }
            let v = self.evaluate(&x);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    /// Promote to a 1x1 matrix-valued map.
    pub fn to_map(&self, strip: f64) -> Result<FourierMap> {
        let radius = self.degree().max(1);
        let mut map = FourierMap::zero(self.d, 1, radius, strip)?;
        for (n, &c) in &self.coeffs {
            map.set_mode(n.to_vec(), CMat::from_element(1, 1, c))?;
        }
        Ok(map)
    }

    pub fn scale(&self, factor: f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .map(|(n, c)| (n.clone(), c * factor))
            .filter(|(_, c)| c.norm() > 0.0)
            .collect();
        Self { d: self.d, coeffs }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrigEntry {
    n: Vec<i64>,
    re: f64,
    #[serde(default)]
    im: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrigRepr {
    d: usize,
    entries: Vec<TrigEntry>,
}

impl From<TrigPolynomial> for TrigRepr {
    fn from(p: TrigPolynomial) -> Self {
        TrigRepr {
            d: p.d,
            entries: p
                .coeffs
                .iter()
                .map(|(n, c)| TrigEntry {
                    n: n.clone(),
                    re: c.re,
                    im: c.im,
                })
                .collect(),
        }
    }
}

impl TryFrom<TrigRepr> for TrigPolynomial {
    type Error = FourierError;

    fn try_from(repr: TrigRepr) -> Result<Self> {
        let mut coeffs = BTreeMap::new();
        for entry in repr.entries {
            if coeffs
                .insert(entry.n.clone(), Complex64::new(entry.re, entry.im))
                .is_some()
            {
                return Err(FourierError::InvalidParameter(format!(
                    "duplicate mode {:?} in serialized polynomial",
                    entry.n
                )));
            }
        }
        TrigPolynomial::new(repr.d, coeffs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_evaluates_exactly() {
        let p = TrigPolynomial::cosine();
        for &x in &[0.0, 0.125, 0.3, 0.5, 0.77] {
            assert!((p.evaluate(&[x]) - 2.0 * (TAU * x).cos()).abs() < 1e-14);
        }
        assert_eq!(p.degree(), 1);
    }

    #[test]
    fn asymmetric_coefficients_are_rejected() {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(vec![1], Complex64::new(1.0, 0.5));
        coeffs.insert(vec![-1], Complex64::new(1.0, 0.5));
        match TrigPolynomial::new(1, coeffs.clone()) {
            Err(FourierError::SymmetryDefect { defect }) => assert!(defect > 0.9),
            other => panic!("expected symmetry defect, got {other:?}"),
        }
        let fixed = TrigPolynomial::symmetrized(1, coeffs).unwrap();
        for &x in &[0.1, 0.6] {
            assert!(fixed.evaluate(&[x]).is_finite());
        }
    }

    #[test]
    fn laurent_on_unit_circle_matches_torus_values() {
        let p = TrigPolynomial::cosine();
        let x = 0.21;
        let z = Complex64::from_polar(1.0, TAU * x);
        let v = p.evaluate_laurent(z).unwrap();
        assert!((v.re - p.evaluate(&[x])).abs() < 1e-13);
        assert!(v.im.abs() < 1e-13);
    }

    #[test]
    fn range_of_cosine_is_minus_two_to_two() {
        let (lo, hi) = TrigPolynomial::cosine().range_on_grid(400);
        assert!((lo + 2.0).abs() < 1e-3);
        assert!((hi - 2.0).abs() < 1e-3);
    }

    #[test]
    fn two_dimensional_polynomial_evaluates() {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(vec![1, 0], Complex64::new(0.5, 0.0));
        coeffs.insert(vec![-1, 0], Complex64::new(0.5, 0.0));
        coeffs.insert(vec![0, 1], Complex64::new(0.0, -0.5));
        coeffs.insert(vec![0, -1], Complex64::new(0.0, 0.5));
        let p = TrigPolynomial::new(2, coeffs).unwrap();
        // cos(2 pi x) + sin(2 pi y)
        for &(x, y) in &[(0.1, 0.2), (0.7, 0.45)] {
            let expected = (TAU * x).cos() + (TAU * y).sin();
            assert!((p.evaluate(&[x, y]) - expected).abs() < 1e-13);
        }
    }

    #[test]
    fn serde_round_trip() {
        let p = TrigPolynomial::cosine().scale(1.5);
        let json = serde_json::to_string(&p).unwrap();
        let back: TrigPolynomial = serde_json::from_str(&json).unwrap();
        assert!((back.evaluate(&[0.3]) - p.evaluate(&[0.3])).abs() < 1e-15);
    }
}
