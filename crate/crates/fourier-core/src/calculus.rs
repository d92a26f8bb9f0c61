//! Exponential and logarithm of matrix-valued torus maps.
//!
//! Two complementary routes are provided. The grid route samples the map on
//! an oversampled uniform grid, applies the pointwise matrix function, and
//! projects back to a mode ball by separable DFT, reporting the spectral mass
//! it had to drop. The series route works directly on coefficients in
//! deviation form (e^Y - I and log(I + D) without ever adding the identity),
//! which keeps full relative precision when the input is many orders of
//! magnitude below one.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{FourierError, Result};
use crate::frequency::linf_norm;
use crate::map::FourierMap;
use crate::matfn::{mat_exp, principal_log};

type CMat = DMatrix<Complex64>;

const TAU: f64 = std::f64::consts::TAU;

/// What the grid projection kept and what it had to drop.
#[derive(Debug, Clone)]
pub struct ProjectionReport {
    /// Grid points per torus coordinate.
    pub grid_per_dim: usize,
    /// Max-component radius of the retained mode box.
    pub kept_radius: i64,
    /// Unweighted norm of the projected mass outside the retained box.
    pub tail_norm: f64,
}

/// Pointwise matrix exponential of a map, projected to |n|_inf <= radius.
/// Errors when the dropped spectral mass exceeds tail_tol.
pub fn matrix_exp_map(
    f: &FourierMap,
    radius: i64,
    tail_tol: f64,
) -> Result<(FourierMap, ProjectionReport)> {
    grid_transform(f, radius, tail_tol, |value| Ok(mat_exp(value)))
}

/// Pointwise principal matrix logarithm of a map, projected to
/// |n|_inf <= radius. Fails with a branch error when any eigenvalue at any
/// grid point comes within branch_tol of the closed negative real axis, and
/// with a convergence error when the dropped spectral mass exceeds tail_tol.
pub fn matrix_log_map(
    a: &FourierMap,
    radius: i64,
    branch_tol: f64,
    tail_tol: f64,
) -> Result<(FourierMap, ProjectionReport)> {
    grid_transform(a, radius, tail_tol, |value| principal_log(value, branch_tol))
}

fn grid_transform(
    f: &FourierMap,
    radius: i64,
    tail_tol: f64,
    mut point_fn: impl FnMut(&CMat) -> Result<CMat>,
) -> Result<(FourierMap, ProjectionReport)> {
    // 4x oversampling relative to the input support keeps aliasing of the
    // entire-function tail far below the reported in-band tail.
    let oversample = 4 * f.radius();
    let (out, report) = project_function(
        f.torus_dim(),
        f.matrix_dim(),
        f.strip(),
        radius,
        oversample,
        |x| point_fn(&f.evaluate(x)),
    )?;
    if report.tail_norm > tail_tol {
        return Err(FourierError::NoConvergence(format!(
            "grid projection dropped spectral mass {:.3e}, above the allowed {tail_tol:.3e}; \
             enlarge the target radius",
            report.tail_norm
        )));
    }
    Ok((out, report))
}

/// Project a pointwise-defined matrix function on the torus to Fourier
/// coefficients with |n|_inf <= radius, sampling a uniform grid of
/// 2*max(oversample_radius, radius, 1)+1 points per dimension. Reports the
/// mass of computed band modes outside the retained box; checking it
/// against a tolerance is the caller's policy.
pub fn project_function(
    d: usize,
    m: usize,
    strip: f64,
    radius: i64,
    oversample_radius: i64,
    mut point_fn: impl FnMut(&[f64]) -> Result<CMat>,
) -> Result<(FourierMap, ProjectionReport)> {
    if radius < 0 {
        return Err(FourierError::InvalidParameter(format!(
            "projection radius must be nonnegative, got {radius}"
        )));
    }
    let r_grid = oversample_radius.max(radius).max(1);
    let n = (2 * r_grid + 1) as usize;
    let total = n.pow(d as u32);

    let mut data: Vec<CMat> = Vec::with_capacity(total);
    let mut x = vec![0.0_f64; d];
    for flat in 0..total {
        let mut rest = flat;
        for xi in x.iter_mut() {
            *xi = (rest % n) as f64 / n as f64;
            rest /= n;
        }
        let value = point_fn(&x)?;
        if value.nrows() != m || value.ncols() != m {
            return Err(FourierError::DimensionMismatch(format!(
                "sampled value is {}x{}, expected {m}x{m}",
                value.nrows(),
                value.ncols()
            )));
        }
        data.push(value);
    }

    for axis in 0..d {
        dft_axis(&mut data, n, axis, d, m);
    }

    let mut out = FourierMap::zero(d, m, radius, strip)?;
    let mut tail = 0.0_f64;
    let half = (n / 2) as i64;
    let mut idx = vec![0usize; d];
    for flat in 0..total {
        let mut rest = flat;
        for slot in idx.iter_mut() {
            *slot = rest % n;
            rest /= n;
        }
        let mode: Vec<i64> = idx
            .iter()
            .map(|&k| {
                let k = k as i64;
                if k <= half {
                    k
                } else {
                    k - n as i64
                }
            })
            .collect();
        if linf_norm(&mode) <= radius {
            out.add_to_mode(mode, data[flat].clone())?;
        } else {
            tail += crate::matfn::op_norm(&data[flat]);
        }
    }
    // Kill DFT rounding dust, far below anything the projection resolves.
    let peak = out
        .modes()
        .map(|(_, c)| crate::matfn::op_norm(c))
        .fold(0.0_f64, f64::max);
    let out = out.prune(1e-15 * peak);
    Ok((
        out,
        ProjectionReport {
            grid_per_dim: n,
            kept_radius: radius,
            tail_norm: tail,
        },
    ))
}

/// In-place DFT along one axis of the flat row-major sample array, with the
/// 1/n normalization folded in so the final values are Fourier coefficients.
fn dft_axis(data: &mut [CMat], n: usize, axis: usize, d: usize, m: usize) {
    let stride = n.pow(axis as u32);
    let total = n.pow(d as u32);
    let inv_n = 1.0 / n as f64;
    let mut line: Vec<CMat> = vec![CMat::zeros(m, m); n];
    for base in 0..total {
        if (base / stride) % n != 0 {
            continue;
        }
        for (k, slot) in line.iter_mut().enumerate() {
            let mut acc = CMat::zeros(m, m);
            for j in 0..n {
                let w = Complex64::from_polar(inv_n, -TAU * ((k * j) % n) as f64 * inv_n);
                acc.zip_apply(&data[base + j * stride], |a, b| *a += b * w);
            }
            *slot = acc;
        }
        for (k, value) in line.iter().enumerate() {
            data[base + k * stride] = value.clone();
        }
    }
}

/// e^Y - I as a coefficient series, truncating every partial product to
/// |n|_inf <= max_radius. Returns the deviation map and the total norm of
/// truncated tails. Requires |Y|_0 at most 1.5 so the series is past its
/// growth hump quickly.
pub fn expm1_series(y: &FourierMap, max_radius: i64) -> Result<(FourierMap, f64)> {
    let norm = y.norm0();
    if norm > 1.5 {
        return Err(FourierError::SeriesDiverged { norm });
    }
    let (mut term, mut tail_total) = y.truncate(max_radius);
    let mut acc = term.clone();
    for k in 2..80u32 {
        let (next, tail) = term.try_mul(y)?.truncate(max_radius);
        term = next.scale(Complex64::new(1.0 / k as f64, 0.0));
        tail_total += tail / k as f64;
        acc = acc.try_add(&term)?;
        let t = term.norm0();
        if t <= 1e-18 * acc.norm0().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok((acc.prune(0.0), tail_total))
}

/// log(I + D) as a coefficient series, truncating every partial product to
/// |n|_inf <= max_radius. Requires |D|_0 < 0.9 for convergence of the
/// alternating series with margin.
pub fn log1p_series(dev: &FourierMap, max_radius: i64) -> Result<(FourierMap, f64)> {
    let norm = dev.norm0();
    if norm >= 0.9 {
        return Err(FourierError::SeriesDiverged { norm });
    }
    let (mut power, mut tail_total) = dev.truncate(max_radius);
    let mut acc = power.clone();
    for k in 2..400u32 {
        let (next, tail) = power.try_mul(dev)?.truncate(max_radius);
        power = next;
        tail_total += tail;
        let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
        let term = power.scale(Complex64::new(sign / k as f64, 0.0));
        acc = acc.try_add(&term)?;
        if power.norm0() / k as f64 <= 1e-18 * acc.norm0().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok((acc.prune(0.0), tail_total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matfn::op_norm;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_small_map(seed: u64, d: usize, m: usize, radius: i64, scale: f64) -> FourierMap {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut map = FourierMap::zero(d, m, radius, 0.05).unwrap();
        let mut add = |n: Vec<i64>, rng: &mut rand_chacha::ChaCha8Rng| {
            let entries: Vec<Complex64> = (0..m * m)
                .map(|_| c(rng.random_range(-scale..scale), rng.random_range(-scale..scale)))
                .collect();
            map.add_to_mode(n, CMat::from_row_slice(m, m, &entries)).unwrap();
        };
        if d == 1 {
            for n in -radius..=radius {
                add(vec![n], &mut rng);
            }
        } else {
            add(vec![0; d], &mut rng);
            add({ let mut v = vec![0; d]; v[0] = 1; v }, &mut rng);
            add({ let mut v = vec![0; d]; v[0] = -1; v }, &mut rng);
            add({ let mut v = vec![0; d]; v[d - 1] = 1; v }, &mut rng);
            add({ let mut v = vec![0; d]; v[d - 1] = -1; v }, &mut rng);
        }
        map
    }

    #[test]
    fn exp_of_constant_map_matches_dense_exponential() {
        let value = CMat::from_row_slice(2, 2, &[c(0.2, 0.1), c(-0.3, 0.0), c(0.1, 0.4), c(0.0, -0.2)]);
        let map = FourierMap::constant(value.clone(), 1, 2, 0.0).unwrap();
        let (e, report) = matrix_exp_map(&map, 2, 1e-10).unwrap();
        assert!(report.tail_norm < 1e-12);
        assert!(op_norm(&(e.zero_mode() - mat_exp(&value))) < 1e-13);
        assert_eq!(e.support_size(), 1);
    }

    #[test]
    fn exp_log_round_trip_on_grid() {
        let y = random_small_map(7, 1, 2, 2, 0.05);
        let (g, _) = matrix_exp_map(&y, 10, 1e-9).unwrap();
        let (back, _) = matrix_log_map(&g, 10, 1e-8, 1e-9).unwrap();
        let defect = back.try_sub(&y).unwrap().norm0();
        assert!(defect < 1e-9, "round trip defect {defect}");
    }

    #[test]
    fn two_dimensional_round_trip() {
        let y = random_small_map(9, 2, 2, 1, 0.04);
        let (g, _) = matrix_exp_map(&y, 6, 1e-9).unwrap();
        let (back, _) = matrix_log_map(&g, 6, 1e-8, 1e-9).unwrap();
        let defect = back.try_sub(&y).unwrap().norm0();
        assert!(defect < 1e-9, "round trip defect {defect}");
    }

    #[test]
    fn log_rejects_negative_spectrum_on_grid() {
        let value = CMat::from_row_slice(2, 2, &[c(-1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)]);
        let map = FourierMap::constant(value, 1, 1, 0.0).unwrap();
        match matrix_log_map(&map, 2, 1e-10, 1e-9) {
            Err(FourierError::NonPrincipalBranch { .. }) => {}
            other => panic!("expected branch error, got {other:?}"),
        }
    }

    #[test]
    fn series_and_grid_exponentials_agree() {
        let y = random_small_map(11, 1, 2, 2, 0.03);
        // Radius 40 holds every series term up to k = 20, so nothing is cut.
        let (dev, tail) = expm1_series(&y, 40).unwrap();
        assert!(tail < 1e-14);
        let (grid, _) = matrix_exp_map(&y, 40, 1e-10).unwrap();
        let id = FourierMap::identity(1, 2, 40, 0.05).unwrap();
        let series_full = id.try_add(&dev).unwrap();
        let defect = series_full.try_sub(&grid).unwrap().norm0();
        assert!(defect < 1e-11, "series vs grid defect {defect}");
    }

    #[test]
    fn series_round_trip_keeps_relative_precision_for_tiny_maps() {
        let y = random_small_map(13, 1, 2, 2, 1e-12);
        let (dev, _) = expm1_series(&y, 8).unwrap();
        let (back, _) = log1p_series(&dev, 8).unwrap();
        let defect = back.try_sub(&y).unwrap().norm0();
        // Relative error must stay near machine precision even though the
        // absolute size is 1e-12; forming I + Y would lose half the digits.
        assert!(defect < 1e-26, "tiny round trip defect {defect}");
    }

    #[test]
    fn log1p_series_rejects_large_deviation() {
        let dev = FourierMap::identity(1, 2, 2, 0.0).unwrap();
        assert!(matches!(
            log1p_series(&dev, 4),
            Err(FourierError::SeriesDiverged { .. })
        ));
    }
}
