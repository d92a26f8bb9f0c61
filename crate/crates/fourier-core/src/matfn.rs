//! Dense matrix calculus for small complex matrices: operator norm,
//! exponential (scaling and squaring), principal logarithm (inverse scaling
//! with Denman-Beavers square roots), and eigenvalues via complex Schur.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{FourierError, Result};

pub type CMat = DMatrix<Complex64>;

/// Spectral norm: the largest singular value, computed as
/// sqrt(lambda_max(M^H M)) through the Hermitian eigensolver.
pub fn op_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let gram = m.adjoint() * m;
    let eigs = gram.symmetric_eigen().eigenvalues;
    eigs.iter().fold(0.0_f64, |acc, &v| acc.max(v.max(0.0))).sqrt()
}

/// Eigenvalues of a general complex matrix: the diagonal of its Schur form.
pub fn eigenvalues(m: &CMat) -> Vec<Complex64> {
    let (_, t) = m.clone().schur().unpack();
    (0..t.nrows()).map(|i| t[(i, i)]).collect()
}

/// Matrix exponential by scaling and squaring with a Taylor kernel.
pub fn mat_exp(m: &CMat) -> CMat {
    let n = m.nrows();
    let norm = m.norm();
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = m.map(|v| v / 2f64.powi(s as i32));
    let mut result = exp_taylor(&scaled);
    for _ in 0..s {
        result = &result * &result;
    }
    let _ = n;
    result
}

/// e^M - I for small M, summed directly so the small part keeps full
/// relative precision (no I + tiny addition).
pub fn mat_expm1(m: &CMat) -> CMat {
    let norm = m.norm();
    if norm > 0.5 {
        return mat_exp(m) - CMat::identity(m.nrows(), m.ncols());
    }
    let mut acc = m.clone();
    let mut term = m.clone();
    for k in 2..60u32 {
        term = (&term * m).map(|v| v / k as f64);
        acc += &term;
        if term.norm() <= 1e-18 * acc.norm().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    acc
}

fn exp_taylor(m: &CMat) -> CMat {
    let n = m.nrows();
    let mut acc = CMat::identity(n, n);
    let mut term = CMat::identity(n, n);
    for k in 1..40u32 {
        term = (&term * m).map(|v| v / k as f64);
        acc += &term;
        if term.norm() <= 1e-18 * acc.norm() {
            break;
        }
    }
    acc
}

/// Distance from z to the closed negative real axis {x <= 0}.
fn negative_axis_distance(z: Complex64) -> f64 {
    if z.re <= 0.0 {
        z.im.abs()
    } else {
        z.norm()
    }
}

/// Guard shared by the principal logarithm and square root: every eigenvalue
/// must keep distance > tol from the closed negative real axis.
pub fn check_log_branch(m: &CMat, tol: f64) -> Result<()> {
    for lambda in eigenvalues(m) {
        let dist = negative_axis_distance(lambda);
        if dist < tol {
            return Err(FourierError::NonPrincipalBranch {
                eigenvalue: lambda,
                distance: dist,
            });
        }
    }
    Ok(())
}

/// Principal matrix square root via the Denman-Beavers iteration.
/// Requires the spectrum off the closed negative real axis (checked by
/// callers through `check_log_branch`).
pub fn mat_sqrt(m: &CMat) -> Result<CMat> {
    let n = m.nrows();
    let mut y = m.clone();
    let mut z = CMat::identity(n, n);
    for _ in 0..80 {
        let y_inv = y
            .clone()
            .lu()
            .try_inverse()
            .ok_or_else(|| FourierError::NoConvergence("square root iterate singular".into()))?;
        let z_inv = z
            .clone()
            .lu()
            .try_inverse()
            .ok_or_else(|| FourierError::NoConvergence("square root iterate singular".into()))?;
        let y_next = (&y + &z_inv).map(|v| v * 0.5);
        let z_next = (&z + &y_inv).map(|v| v * 0.5);
        let delta = (&y_next - &y).norm();
        y = y_next;
        z = z_next;
        if delta <= 1e-16 * y.norm().max(f64::MIN_POSITIVE) {
            return Ok(y);
        }
    }
    // Accept the fixed point if the residual is small even when the step
    // delta stalls above the tight threshold.
    if (&y * &y - m).norm() <= 1e-10 * m.norm().max(1.0) {
        Ok(y)
    } else {
        Err(FourierError::NoConvergence(
            "Denman-Beavers square root did not converge".into(),
        ))
    }
}

/// log(I + X) by the alternating series; requires ||X|| comfortably below 1.
pub fn log1p_taylor(x: &CMat) -> Result<CMat> {
    let norm = op_norm(x);
    if norm > 0.6 {
        return Err(FourierError::SeriesDiverged { norm });
    }
    let mut acc = x.clone();
    let mut power = x.clone();
    for k in 2..120u32 {
        power = &power * x;
        let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
        let term = power.map(|v| v * sign / k as f64);
        acc += &term;
        if term.norm() <= 1e-18 * acc.norm().max(f64::MIN_POSITIVE) {
            return Ok(acc);
        }
    }
    Ok(acc)
}

/// Principal matrix logarithm: inverse scaling by square roots until the
/// iterate sits near the identity, then the log(I + X) series, doubled back.
///
/// Errors with `NonPrincipalBranch` when an eigenvalue comes within
/// `branch_tol` of the closed negative real axis (log branch undefined or
/// numerically meaningless there).
pub fn principal_log(m: &CMat, branch_tol: f64) -> Result<CMat> {
    check_log_branch(m, branch_tol)?;
    let n = m.nrows();
    let id = CMat::identity(n, n);
    let mut current = m.clone();
    let mut doublings = 0u32;
    while op_norm(&(&current - &id)) > 0.35 {
        if doublings >= 40 {
            return Err(FourierError::NoConvergence(
                "inverse scaling for the matrix logarithm stalled".into(),
            ));
        }
        current = mat_sqrt(&current)?;
        doublings += 1;
    }
    let log_small = log1p_taylor(&(&current - &id))?;
    Ok(log_small.map(|v| v * 2f64.powi(doublings as i32)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn op_norm_matches_known_values() {
        let m = CMat::from_row_slice(2, 2, &[c(3.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-4.0, 0.0)]);
        assert!((op_norm(&m) - 4.0).abs() < 1e-12);
        // Rank-one [[0,2],[0,0]] has spectral norm 2.
        let r = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!((op_norm(&r) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn exp_of_nilpotent_is_exact() {
        let m = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.7, 0.2), c(0.0, 0.0), c(0.0, 0.0)]);
        let e = mat_exp(&m);
        assert!((e[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((e[(0, 1)] - c(0.7, 0.2)).norm() < 1e-15);
        assert!((e[(1, 0)]).norm() < 1e-15);
    }

    #[test]
    fn exp_matches_diagonal_closed_form() {
        let m = CMat::from_row_slice(
            2,
            2,
            &[c(0.3, -1.2), c(0.0, 0.0), c(0.0, 0.0), c(-2.0, 0.4)],
        );
        let e = mat_exp(&m);
        assert!((e[(0, 0)] - c(0.3, -1.2).exp()).norm() < 1e-14);
        assert!((e[(1, 1)] - c(-2.0, 0.4).exp()).norm() < 1e-14);
    }

    #[test]
    fn log_exp_round_trip_dense() {
        let m = CMat::from_row_slice(
            3,
            3,
            &[
                c(0.05, 0.02),
                c(-0.4, 0.1),
                c(0.0, 0.3),
                c(0.2, 0.0),
                c(-0.07, -0.3),
                c(0.11, 0.0),
                c(0.0, -0.2),
                c(0.25, 0.05),
                c(0.6, 0.1),
            ],
        );
        let back = principal_log(&mat_exp(&m), 1e-10).unwrap();
        assert!((&back - &m).norm() < 1e-11, "defect {}", (&back - &m).norm());
    }

    #[test]
    fn log_rejects_negative_axis() {
        let m = CMat::from_row_slice(2, 2, &[c(-1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)]);
        match principal_log(&m, 1e-10) {
            Err(FourierError::NonPrincipalBranch { .. }) => {}
            other => panic!("expected branch error, got {other:?}"),
        }
    }

    #[test]
    fn sqrt_squares_back() {
        let m = CMat::from_row_slice(2, 2, &[c(4.0, 1.0), c(1.0, 0.0), c(0.0, 0.5), c(9.0, -2.0)]);
        let s = mat_sqrt(&m).unwrap();
        assert!((&s * &s - &m).norm() < 1e-10);
    }

    #[test]
    fn expm1_keeps_relative_precision_for_tiny_input() {
        let m = CMat::from_row_slice(
            2,
            2,
            &[c(1e-13, 0.0), c(2e-13, 1e-13), c(0.0, 0.0), c(-1e-13, 0.0)],
        );
        let s = mat_expm1(&m);
        // Leading order is m itself; the quadratic correction is ~1e-26.
        assert!((&s - &m).norm() < 1e-25);
        assert!(s[(0, 0)].re != 0.0);
    }
}
