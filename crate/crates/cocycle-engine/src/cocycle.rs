//! Quasi-periodic cocycle over a torus rotation: the pair (alpha, A) acting
//! by (x, v) -> (x + alpha, A(x) v), with finite products A_n(x) defined
//! forward as A(x+(n-1)alpha)...A(x) and backward through explicit inverses.

use fourier_core::{FourierMap, FrequencyVector};
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{EngineError, Result};

pub type CMat = DMatrix<Complex64>;

/// Invertible matrix-valued map over a torus rotation.
#[derive(Debug, Clone)]
pub struct Cocycle {
    alpha: FrequencyVector,
    a: FourierMap,
}

impl Cocycle {
    /// Build a cocycle, checking that A stays invertible on the real torus:
    /// min over a sampling grid of |det A(x)| must exceed 1e-12.
    pub fn new(alpha: FrequencyVector, a: FourierMap) -> Result<Self> {
        if alpha.dim() != a.torus_dim() {
            return Err(EngineError::DimensionMismatch(format!(
                "frequency dimension {} vs map torus dimension {}",
                alpha.dim(),
                a.torus_dim()
            )));
        }
        let min_det = min_abs_det_on_grid(&a);
        if !(min_det > 1e-12) {
            return Err(EngineError::NotInvertible { min_det });
        }
        Ok(Self { alpha, a })
    }

    pub fn alpha(&self) -> &FrequencyVector {
        &self.alpha
    }

    pub fn map(&self) -> &FourierMap {
        &self.a
    }

    pub fn torus_dim(&self) -> usize {
        self.a.torus_dim()
    }

    pub fn matrix_dim(&self) -> usize {
        self.a.matrix_dim()
    }

    /// A(x) at a point of the real torus.
    pub fn evaluate(&self, x: &[f64]) -> CMat {
        self.a.evaluate(x)
    }

    /// The n-step product A_n(x); n = 0 gives the identity and negative n
    /// the inverse-product A_{-n}(x) = A_n(x - n alpha)^{-1}, accumulated
    /// factor by factor.
    pub fn iterate_block(&self, x: &[f64], n: i64) -> Result<CMat> {
        let m = self.matrix_dim();
        let mut acc = CMat::identity(m, m);
        if n >= 0 {
            let mut point = x.to_vec();
            for step in 0..n {
                acc = self.a.evaluate(&point) * acc;
                if acc.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                    return Err(EngineError::IterationOverflow {
                        step: step as usize,
                    });
                }
                point = self.alpha.step(&point);
            }
        } else {
            let mut point = x.to_vec();
            for step in 0..(-n) {
                point = step_back(&self.alpha, &point);
                let inv = self
                    .a
                    .evaluate(&point)
                    .try_inverse()
                    .ok_or(EngineError::NotInvertible { min_det: 0.0 })?;
                acc = inv * acc;
                if acc.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                    return Err(EngineError::IterationOverflow {
                        step: step as usize,
                    });
                }
            }
        }
        Ok(acc)
    }
}

fn step_back(alpha: &FrequencyVector, x: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(alpha.components())
        .map(|(&xi, &ai)| (xi - ai).rem_euclid(1.0))
        .collect()
}

/// Minimum of |det A(x)| over a uniform grid fine enough for the support.
fn min_abs_det_on_grid(a: &FourierMap) -> f64 {
    let d = a.torus_dim();
    let per_dim = (2 * (4 * a.radius()) + 1).max(33) as usize;
    let total = per_dim.pow(d as u32);
    let mut min_det = f64::INFINITY;
    let mut x = vec![0.0_f64; d];
    for flat in 0..total {
        let mut rest = flat;
        for xi in x.iter_mut() {
            *xi = rest as f64 % per_dim as f64 / per_dim as f64;
            rest /= per_dim;
        }
        let det = a.evaluate(&x).determinant().norm();
        min_det = min_det.min(det);
    }
    min_det
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_cocycle(seed: u64, m: usize, radius: i64) -> Cocycle {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut map = FourierMap::zero(1, m, radius, 0.05).unwrap();
        // Dominant constant part keeps the determinant away from zero.
        let diag: Vec<Complex64> = (0..m)
            .map(|_| c(rng.random_range(0.8..1.6), rng.random_range(-0.2..0.2)))
            .collect();
        map.set_mode(vec![0], CMat::from_diagonal(&nalgebra::DVector::from_vec(diag)))
            .unwrap();
        for n in -radius..=radius {
            let entries: Vec<Complex64> = (0..m * m)
                .map(|_| c(rng.random_range(-0.08..0.08), rng.random_range(-0.08..0.08)))
                .collect();
            map.add_to_mode(vec![n], CMat::from_row_slice(m, m, &entries))
                .unwrap();
        }
        Cocycle::new(FrequencyVector::golden_mean(), map).unwrap()
    }

    #[test]
    fn zero_steps_is_identity_and_one_step_is_a() {
        let cocycle = random_cocycle(1, 2, 1);
        let x = [0.37];
        let id = cocycle.iterate_block(&x, 0).unwrap();
        assert!((id - CMat::identity(2, 2)).norm() < 1e-15);
        let one = cocycle.iterate_block(&x, 1).unwrap();
        assert!((one - cocycle.evaluate(&x)).norm() < 1e-15);
    }

    #[test]
    fn cocycle_identity_holds_for_mixed_signs() {
        let cocycle = random_cocycle(2, 3, 1);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for &(n, k) in &[(5i64, 3i64), (4, -2), (-3, 6), (-4, -3), (0, 7)] {
            let x = [rng.random_range(0.0..1.0)];
            let alpha = cocycle.alpha().components()[0];
            let shifted = [(x[0] + k as f64 * alpha).rem_euclid(1.0)];
            let lhs = cocycle.iterate_block(&x, n + k).unwrap();
            let rhs = cocycle.iterate_block(&shifted, n).unwrap()
                * cocycle.iterate_block(&x, k).unwrap();
            let rel = (&lhs - &rhs).norm() / lhs.norm();
            assert!(rel < 1e-8, "identity violated at n={n} k={k}: {rel:.3e}");
        }
    }

    #[test]
    fn backward_iteration_inverts_forward() {
        let cocycle = random_cocycle(3, 2, 2);
        let x = [0.21];
        let fwd = cocycle.iterate_block(&x, 6).unwrap();
        let alpha = cocycle.alpha().components()[0];
        let end = [(x[0] + 6.0 * alpha).rem_euclid(1.0)];
        let bwd = cocycle.iterate_block(&end, -6).unwrap();
        assert!((bwd * fwd - CMat::identity(2, 2)).norm() < 1e-10);
    }

    #[test]
    fn singular_map_is_rejected() {
        let mut map = FourierMap::zero(1, 2, 1, 0.0).unwrap();
        map.set_mode(
            vec![0],
            CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]),
        )
        .unwrap();
        match Cocycle::new(FrequencyVector::golden_mean(), map) {
            Err(EngineError::NotInvertible { .. }) => {}
            other => panic!("expected invertibility error, got {other:?}"),
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let map = FourierMap::identity(2, 2, 1, 0.0).unwrap();
        match Cocycle::new(FrequencyVector::golden_mean(), map) {
            Err(EngineError::DimensionMismatch(_)) => {}
            other => panic!("expected dimension error, got {other:?}"),
        }
    }
}
