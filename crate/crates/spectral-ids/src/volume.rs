//! Finite-volume restrictions of quasi-periodic operators.
//!
//! Operators truncate to boxes with Dirichlet boundary: long-range families
//! live on the lattice cube [-box, box]^d with hopping from the potential's
//! Fourier coefficients and diagonal from the sampling function; finite-range
//! families live on the interval [-box, box] with banded hopping and a
//! quasi-periodically sampled diagonal. Nearest-neighbor cases reduce to a
//! real symmetric tridiagonal matrix whose eigenvalue counts come from Sturm
//! sequences; everything else goes through a dense Hermitian eigensolve.

use cocycle_engine::{OperatorFamily, OperatorSpec};
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Result, SpectralError};

/// Largest dense matrix dimension the eigensolve path accepts.
pub const DENSE_DIM_CAP: usize = 8000;

/// A truncated operator, stored in the cheapest form that supports
/// eigenvalue counting.
#[derive(Debug, Clone)]
pub enum FiniteVolume {
    /// Real symmetric tridiagonal: diagonal entries and subdiagonal
    /// magnitudes (a unimodular gauge makes any Hermitian tridiagonal real).
    Tridiagonal { diag: Vec<f64>, off: Vec<f64> },
    /// Dense Hermitian fallback.
    Dense(DMatrix<Complex64>),
}

impl FiniteVolume {
    pub fn dim(&self) -> usize {
        match self {
            FiniteVolume::Tridiagonal { diag, .. } => diag.len(),
            FiniteVolume::Dense(m) => m.nrows(),
        }
    }

    /// Number of eigenvalues strictly below each query energy. Queries are
    /// independent; the dense path pays one eigensolve for all of them.
    pub fn counts_below(&self, energies: &[f64]) -> Result<Vec<usize>> {
        match self {
            FiniteVolume::Tridiagonal { diag, off } => Ok(energies
                .iter()
                .map(|&e| sturm_count(diag, off, e))
                .collect()),
            FiniteVolume::Dense(_) => {
                let eigs = self.eigenvalues()?;
                Ok(energies
                    .iter()
                    .map(|&e| eigs.partition_point(|&v| v < e))
                    .collect())
            }
        }
    }

    /// All eigenvalues, sorted ascending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        match self {
            FiniteVolume::Tridiagonal { diag, off } => Ok(tridiagonal_eigenvalues(diag, off)),
            FiniteVolume::Dense(m) => {
                let mut eigs: Vec<f64> = m
                    .clone()
                    .symmetric_eigen()
                    .eigenvalues
                    .iter()
                    .copied()
                    .collect();
                if eigs.iter().any(|v| !v.is_finite()) {
                    return Err(SpectralError::Eigensolve(
                        "dense Hermitian eigensolve returned non-finite values".into(),
                    ));
                }
                eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
                Ok(eigs)
            }
        }
    }

    /// Worst Hermiticity defect, zero for the tridiagonal form.
    pub fn hermitian_defect(&self) -> f64 {
        match self {
            FiniteVolume::Tridiagonal { .. } => 0.0,
            FiniteVolume::Dense(m) => {
                let mut worst = 0.0_f64;
                for i in 0..m.nrows() {
                    for j in 0..m.ncols() {
                        worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
                    }
                }
                worst
            }
        }
    }
}

/// Phase dimension an operator family expects: a scalar angle for long-range
/// families, the potential's torus dimension for finite-range ones.
pub fn phase_dim(spec: &OperatorSpec, family: OperatorFamily) -> usize {
    match family {
        OperatorFamily::LongRange => 1,
        OperatorFamily::FiniteRange => spec.potential().torus_dim(),
    }
}

/// Matrix dimension of the truncation to the given box.
pub fn volume_dim(spec: &OperatorSpec, family: OperatorFamily, box_radius: i64) -> usize {
    let side = (2 * box_radius + 1) as usize;
    match family {
        OperatorFamily::LongRange => side.pow(spec.potential().torus_dim() as u32),
        OperatorFamily::FiniteRange => side,
    }
}

/// Truncate an operator to a finite box at a fixed phase.
pub fn assemble_finite_volume(
    spec: &OperatorSpec,
    family: OperatorFamily,
    box_radius: i64,
    phase: &[f64],
) -> Result<FiniteVolume> {
    if box_radius < 1 {
        return Err(SpectralError::InvalidParameter(format!(
            "box radius must be at least 1, got {box_radius}"
        )));
    }
    let need = phase_dim(spec, family);
    if phase.len() != need {
        return Err(SpectralError::PhaseMismatch {
            got: phase.len(),
            need,
        });
    }
    match family {
        OperatorFamily::FiniteRange => assemble_finite_range(spec, box_radius, phase),
        OperatorFamily::LongRange => assemble_long_range(spec, box_radius, phase[0]),
    }
}

/// Banded hopping from the trig-polynomial symbol, diagonal from the sampled
/// potential.
fn assemble_finite_range(spec: &OperatorSpec, box_radius: i64, x: &[f64]) -> Result<FiniteVolume> {
    let dim = (2 * box_radius + 1) as usize;
    let w = spec.hopping();
    let v = spec.potential();
    let alpha = spec.alpha().components();
    let m = spec.half_bandwidth();

    let diag: Vec<f64> = (-box_radius..=box_radius)
        .map(|n| {
            let point: Vec<f64> = x
                .iter()
                .zip(alpha)
                .map(|(xi, ai)| (xi + n as f64 * ai).rem_euclid(1.0))
                .collect();
            w.coeff(&[0]).re + spec.lambda_inv() * v.evaluate(&point)[(0, 0)].re
        })
        .collect();

    if m == 1 {
        let off = vec![w.coeff(&[1]).re; dim - 1];
        return Ok(FiniteVolume::Tridiagonal { diag, off });
    }

    check_dense_cap(dim)?;
    let mut matrix = DMatrix::<Complex64>::zeros(dim, dim);
    for i in 0..dim {
        matrix[(i, i)] = Complex64::new(diag[i], 0.0);
        for k in 1..=m as usize {
            if i + k < dim {
                let hop = Complex64::from(w.coeff(&[k as i64]).re);
                matrix[(i, i + k)] = hop;
                matrix[(i + k, i)] = hop;
            }
        }
    }
    Ok(FiniteVolume::Dense(matrix))
}

/// Hopping from the potential's Fourier coefficients on the lattice cube,
/// diagonal from the sampling function along the orbit of the angle.
fn assemble_long_range(spec: &OperatorSpec, box_radius: i64, theta: f64) -> Result<FiniteVolume> {
    let v = spec.potential();
    let w = spec.hopping();
    let d = v.torus_dim();
    let side = (2 * box_radius + 1) as usize;
    let dim = side.pow(d as u32);

    let diag_at = |site: &[i64]| -> f64 {
        let angle = theta + spec.alpha().dot(site);
        spec.lambda() * w.evaluate(&[angle.rem_euclid(1.0)])
    };

    // Nearest-neighbor chains gauge to a real tridiagonal.
    if d == 1 && v.radius() <= 1 {
        let hop = v
            .mode(&[1])
            .map(|c| c[(0, 0)].norm())
            .unwrap_or(0.0);
        let diag: Vec<f64> = (-box_radius..=box_radius)
            .map(|n| diag_at(&[n]) + v.mode(&[0]).map(|c| c[(0, 0)].re).unwrap_or(0.0))
            .collect();
        let off = vec![hop; dim - 1];
        return Ok(FiniteVolume::Tridiagonal { diag, off });
    }

    check_dense_cap(dim)?;
    let sites: Vec<Vec<i64>> = (0..dim)
        .map(|flat| {
            let mut site = vec![0i64; d];
            let mut rest = flat;
            for s in site.iter_mut() {
                *s = (rest % side) as i64 - box_radius;
                rest /= side;
            }
            site
        })
        .collect();

    let mut matrix = DMatrix::<Complex64>::zeros(dim, dim);
    let mut offset = vec![0i64; d];
    for i in 0..dim {
        for j in 0..dim {
            for (o, (a, b)) in offset.iter_mut().zip(sites[i].iter().zip(&sites[j])) {
                *o = a - b;
            }
            if let Some(c) = v.mode(&offset) {
                matrix[(i, j)] = c[(0, 0)];
            }
        }
        matrix[(i, i)] += Complex64::from(diag_at(&sites[i]));
    }
    Ok(FiniteVolume::Dense(matrix))
}

fn check_dense_cap(dim: usize) -> Result<()> {
    if dim > DENSE_DIM_CAP {
        return Err(SpectralError::DimensionCap {
            dim,
            cap: DENSE_DIM_CAP,
        });
    }
    Ok(())
}

/// Number of eigenvalues of the symmetric tridiagonal matrix strictly below
/// x, from the sign changes of the LDL pivots.
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let pivmin = 1e-300;
    let mut count = 0;
    let mut d = 1.0_f64;
    for i in 0..diag.len() {
        let b2 = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] };
        d = diag[i] - x - b2 / d;
        if d.abs() < pivmin {
            d = -pivmin;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// All eigenvalues of a symmetric tridiagonal matrix by bisection on the
/// Sturm count, sorted ascending.
fn tridiagonal_eigenvalues(diag: &[f64], off: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let (mut glo, mut ghi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        let r = off.get(i).map_or(0.0, |b| b.abs())
            + if i == 0 { 0.0 } else { off[i - 1].abs() };
        glo = glo.min(diag[i] - r);
        ghi = ghi.max(diag[i] + r);
    }
    let pad = 1e-10 * (ghi - glo).abs().max(1.0);
    glo -= pad;
    ghi += pad;

    (0..n)
        .map(|k| {
            let (mut lo, mut hi) = (glo, ghi);
            for _ in 0..120 {
                let mid = 0.5 * (lo + hi);
                if sturm_count(diag, off, mid) > k {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo <= 1e-15 * hi.abs().max(lo.abs()).max(1.0) {
                    break;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}
