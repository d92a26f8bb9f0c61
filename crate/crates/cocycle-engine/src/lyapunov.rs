//! Lyapunov spectrum estimation by QR re-orthogonalization.
//!
//! Each sampled phase iterates the cocycle on an orthonormal frame,
//! re-orthogonalizing with modified Gram-Schmidt every step (two projection
//! passes keep the frame orthonormal to machine precision) and accumulating
//! the log column norms over the second half of the orbit. The first half
//! is discarded as burn-in so the frame has aligned with the Oseledets
//! flag before averaging starts. Phase estimates reduce in index order, so
//! results do not depend on the thread count.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::Serialize;

use crate::cocycle::Cocycle;
use crate::error::{EngineError, Result};

type CMat = DMatrix<Complex64>;

/// How the phases entering a spectrum estimate were chosen.
#[derive(Debug, Clone, Serialize)]
pub struct SamplingProvenance {
    pub grid_samples: usize,
    pub random_samples: usize,
    pub seed: Option<u64>,
    pub burn_in: usize,
}

/// Phase-averaged Lyapunov exponents, sorted nonincreasing, in nats per step.
#[derive(Debug, Clone, Serialize)]
pub struct LyapunovSpectrum {
    pub values: Vec<f64>,
    /// Standard error of each exponent over the phase samples.
    pub stderr: Vec<f64>,
    pub n_iters: usize,
    pub phase_samples: usize,
    pub provenance: SamplingProvenance,
}

/// Estimate the Lyapunov spectrum of a cocycle.
///
/// Phases come from a deterministic uniform grid; passing a seed replaces
/// half of them with seeded random points, which is useful as an
/// independence check on the grid. Errors if the iteration loses
/// finiteness, reporting the failing step.
pub fn lyapunov_spectrum(
    c: &Cocycle,
    n_iters: usize,
    phase_samples: usize,
    seed: Option<u64>,
) -> Result<LyapunovSpectrum> {
    if n_iters < 1 {
        return Err(EngineError::InvalidParameter(
            "iteration count must be at least 1".into(),
        ));
    }
    if phase_samples < 1 {
        return Err(EngineError::InvalidParameter(
            "phase sample count must be at least 1".into(),
        ));
    }
    let grid_samples = match seed {
        None => phase_samples,
        Some(_) => phase_samples.div_ceil(2),
    };
    let random_samples = phase_samples - grid_samples;
    let phases = phase_points(c.torus_dim(), grid_samples, random_samples, seed);
    let burn_in = n_iters / 2;

    let per_phase: Vec<Vec<f64>> = phases
        .par_iter()
        .map(|x| phase_exponents(c, x, n_iters, burn_in))
        .collect::<Result<_>>()?;

    let m = c.matrix_dim();
    let count = per_phase.len() as f64;
    let mut values = vec![0.0_f64; m];
    for sample in &per_phase {
        for (v, s) in values.iter_mut().zip(sample) {
            *v += s / count;
        }
    }
    let mut stderr = vec![0.0_f64; m];
    if per_phase.len() > 1 {
        for sample in &per_phase {
            for (e, (s, v)) in stderr.iter_mut().zip(sample.iter().zip(&values)) {
                *e += (s - v) * (s - v);
            }
        }
        for e in stderr.iter_mut() {
            *e = (*e / (count * (count - 1.0))).sqrt();
        }
    }

    Ok(LyapunovSpectrum {
        values,
        stderr,
        n_iters,
        phase_samples,
        provenance: SamplingProvenance {
            grid_samples,
            random_samples,
            seed,
            burn_in,
        },
    })
}

/// Sorted log column growth rates along one orbit.
fn phase_exponents(c: &Cocycle, x: &[f64], n_iters: usize, burn_in: usize) -> Result<Vec<f64>> {
    let m = c.matrix_dim();
    let mut q = CMat::identity(m, m);
    let mut w = CMat::zeros(m, m);
    let mut sums = vec![0.0_f64; m];
    let mut point = x.to_vec();
    let kept = (n_iters - burn_in) as f64;

    for step in 0..n_iters {
        let a = c.evaluate(&point);
        // w = a * q without allocating.
        for j in 0..m {
            for i in 0..m {
                let mut acc = Complex64::ZERO;
                for k in 0..m {
                    acc += a[(i, k)] * q[(k, j)];
                }
                w[(i, j)] = acc;
            }
        }
        // Modified Gram-Schmidt, two passes, writing the frame back into q.
        for j in 0..m {
            for _ in 0..2 {
                for i in 0..j {
                    let mut proj = Complex64::ZERO;
                    for k in 0..m {
                        proj += q[(k, i)].conj() * w[(k, j)];
                    }
                    for k in 0..m {
                        let correction = proj * q[(k, i)];
                        w[(k, j)] -= correction;
                    }
                }
            }
            let norm = w.column(j).norm();
            if !norm.is_finite() || norm == 0.0 {
                return Err(EngineError::IterationOverflow { step });
            }
            if step >= burn_in {
                sums[j] += norm.ln();
            }
            let inv = 1.0 / norm;
            for k in 0..m {
                q[(k, j)] = w[(k, j)] * inv;
            }
        }
        point = c.alpha().step(&point);
    }

    let mut exps: Vec<f64> = sums.iter().map(|s| s / kept).collect();
    exps.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(exps)
}

/// Deterministic grid phases followed by optional seeded random phases.
fn phase_points(
    d: usize,
    grid_count: usize,
    random_count: usize,
    seed: Option<u64>,
) -> Vec<Vec<f64>> {
    let mut points = Vec::with_capacity(grid_count + random_count);
    if grid_count > 0 {
        let per_dim = (grid_count as f64).powf(1.0 / d as f64).ceil() as usize;
        let per_dim = per_dim.max(1);
        let total = per_dim.pow(d as u32);
        for flat in 0..total {
            if points.len() == grid_count {
                break;
            }
            let mut x = vec![0.0_f64; d];
            let mut rest = flat;
            for xi in x.iter_mut() {
                *xi = ((rest % per_dim) as f64 + 0.5) / per_dim as f64;
                rest /= per_dim;
            }
            points.push(x);
        }
    }
    if random_count > 0 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed.unwrap_or(0));
        for _ in 0..random_count {
            points.push((0..d).map(|_| rng.random_range(0.0..1.0)).collect());
        }
    }
    points
}

/// Torus average of ln |det A(x)| on a uniform grid, the exact value of the
/// exponent sum.
pub fn log_det_average(c: &Cocycle, points_per_dim: usize) -> f64 {
    let d = c.torus_dim();
    let total = points_per_dim.pow(d as u32);
    let mut acc = 0.0_f64;
    let mut x = vec![0.0_f64; d];
    for flat in 0..total {
        let mut rest = flat;
        for xi in x.iter_mut() {
            *xi = (rest % points_per_dim) as f64 / points_per_dim as f64;
            rest /= points_per_dim;
        }
        acc += c.evaluate(&x).determinant().norm().ln();
    }
    acc / total as f64
}

/// Coarse top-exponent estimate from plain vector growth, with no
/// re-orthogonalization. Useful as an independent cross-check on the QR
/// estimate; accuracy is limited by the fixed starting vector.
pub fn top_exponent_by_vector_growth(c: &Cocycle, x: &[f64], n: usize) -> f64 {
    let m = c.matrix_dim();
    let mut v = nalgebra::DVector::from_fn(m, |i, _| Complex64::new(1.0 + i as f64, 0.3));
    v /= Complex64::from(v.norm());
    let mut point = x.to_vec();
    let mut acc = 0.0;
    for _ in 0..n {
        v = c.evaluate(&point) * v;
        let norm = v.norm();
        acc += norm.ln();
        v /= Complex64::from(norm);
        point = c.alpha().step(&point);
    }
    acc / n as f64
}

/// A run of exponents treated as one multiple exponent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentGroup {
    pub mean: f64,
    pub multiplicity: usize,
}

/// Group nearly equal exponents. Two neighbors join one group when they
/// differ by less than the threshold, which defaults to
/// max(10 * worst stderr, 1e-4).
pub fn group_multiplicities(
    spectrum: &LyapunovSpectrum,
    threshold: Option<f64>,
) -> Vec<ExponentGroup> {
    let worst = spectrum.stderr.iter().fold(0.0_f64, |a, &b| a.max(b));
    let threshold = threshold.unwrap_or_else(|| (10.0 * worst).max(1e-4));
    let mut groups: Vec<ExponentGroup> = Vec::new();
    let mut start = 0;
    for i in 0..spectrum.values.len() {
        let last_in_run = i + 1 == spectrum.values.len()
            || (spectrum.values[i] - spectrum.values[i + 1]).abs() >= threshold;
        if last_in_run {
            let run = &spectrum.values[start..=i];
            groups.push(ExponentGroup {
                mean: run.iter().sum::<f64>() / run.len() as f64,
                multiplicity: run.len(),
            });
            start = i + 1;
        }
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{transfer_cocycle, OperatorSpec};
    use fourier_core::{FourierMap, FrequencyVector, TrigPolynomial};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn constant_cocycle(value: CMat) -> Cocycle {
        let m = value.nrows();
        let map = FourierMap::constant(value, 1, 0, 0.0).unwrap();
        let _ = m;
        Cocycle::new(FrequencyVector::golden_mean(), map).unwrap()
    }

    fn amo_cocycle(coupling: f64, energy: f64) -> Cocycle {
        let spec = OperatorSpec::new(
            TrigPolynomial::cosine(),
            TrigPolynomial::cosine().to_map(0.05).unwrap(),
            coupling,
            1.0 / coupling.max(1e-6),
            FrequencyVector::golden_mean(),
        )
        .unwrap();
        transfer_cocycle(&spec, energy).unwrap()
    }

    #[test]
    fn diagonal_constant_is_exact() {
        let a = CMat::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.5, 0.0)]);
        let spectrum = lyapunov_spectrum(&constant_cocycle(a), 200, 3, None).unwrap();
        assert!((spectrum.values[0] - 2.0_f64.ln()).abs() < 1e-8);
        assert!((spectrum.values[1] + 2.0_f64.ln()).abs() < 1e-8);
    }

    #[test]
    fn misordered_diagonal_is_sorted() {
        let a = CMat::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)]);
        let spectrum = lyapunov_spectrum(&constant_cocycle(a), 200, 2, None).unwrap();
        assert!((spectrum.values[0] - 2.0_f64.ln()).abs() < 1e-8);
        assert!((spectrum.values[1] + 2.0_f64.ln()).abs() < 1e-8);
    }

    #[test]
    fn imaginary_rotation_number_sets_the_top_exponent() {
        // e^{-2 pi i rho} with rho_1 = i/(2 pi) has modulus e at the top.
        let a = CMat::from_row_slice(
            2,
            2,
            &[c(1.0_f64.exp(), 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        );
        let spectrum = lyapunov_spectrum(&constant_cocycle(a), 100, 2, None).unwrap();
        assert!((spectrum.values[0] - 1.0).abs() < 1e-8);
        assert!(spectrum.values[1].abs() < 1e-8);
    }

    #[test]
    fn nondiagonalizable_constant_still_converges_logarithmically() {
        // A Jordan block has both exponents ln 1 = 0; growth is polynomial,
        // so the estimate drifts to zero like (ln n)/n.
        let a = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let spectrum = lyapunov_spectrum(&constant_cocycle(a), 20_000, 2, None).unwrap();
        assert!(spectrum.values[0].abs() < 2e-3, "got {}", spectrum.values[0]);
    }

    #[test]
    fn supercritical_cosine_coupling_exceeds_its_lower_bound() {
        // Coupling 3 puts the top exponent at ln 3 on the spectrum, and the
        // subharmonicity lower bound holds off the spectrum too.
        let spectrum = lyapunov_spectrum(&amo_cocycle(3.0, 0.0), 20_000, 4, None).unwrap();
        assert!(
            spectrum.values[0] >= 3.0_f64.ln() - 0.02,
            "top exponent {} below the coupling bound",
            spectrum.values[0]
        );
        // Independent coarse estimate from plain vector growth.
        let power = top_exponent_by_vector_growth(&amo_cocycle(3.0, 0.0), &[0.123], 20_000);
        assert!(
            (spectrum.values[0] - power).abs() < 0.05,
            "qr {} vs power {power}",
            spectrum.values[0]
        );
    }

    #[test]
    fn determinant_sum_rule_holds() {
        let spectrum = lyapunov_spectrum(&amo_cocycle(1.5, 0.4), 10_000, 8, None).unwrap();
        let sum: f64 = spectrum.values.iter().sum();
        let avg = log_det_average(&amo_cocycle(1.5, 0.4), 1024);
        let slack: f64 = 3.0 * spectrum.stderr.iter().sum::<f64>() + 1e-10;
        assert!(
            (sum - avg).abs() <= slack,
            "sum {sum} vs det average {avg}, slack {slack}"
        );
    }

    #[test]
    fn symplectic_pair_structure_appears_in_transfer_spectra() {
        let spectrum = lyapunov_spectrum(&amo_cocycle(2.0, 0.3), 30_000, 6, None).unwrap();
        let m = spectrum.values.len();
        for i in 0..m {
            let pair_gap = (spectrum.values[i] + spectrum.values[m - 1 - i]).abs();
            let slack = 5.0 * (spectrum.stderr[i] + spectrum.stderr[m - 1 - i]).max(1e-6);
            assert!(pair_gap <= slack, "pair {i} gap {pair_gap} above {slack}");
        }
    }

    #[test]
    fn seeded_random_phases_agree_with_the_grid() {
        let grid = lyapunov_spectrum(&amo_cocycle(2.0, 0.0), 20_000, 6, None).unwrap();
        let mixed = lyapunov_spectrum(&amo_cocycle(2.0, 0.0), 20_000, 6, Some(7)).unwrap();
        assert_eq!(mixed.provenance.grid_samples, 3);
        assert_eq!(mixed.provenance.random_samples, 3);
        assert!((grid.values[0] - mixed.values[0]).abs() < 5e-3);
    }

    #[test]
    fn multiplicity_grouping_follows_the_threshold() {
        let spectrum = LyapunovSpectrum {
            values: vec![0.9, 0.89995, 0.0, -0.9],
            stderr: vec![0.0; 4],
            n_iters: 1,
            phase_samples: 1,
            provenance: SamplingProvenance {
                grid_samples: 1,
                random_samples: 0,
                seed: None,
                burn_in: 0,
            },
        };
        let groups = group_multiplicities(&spectrum, None);
        assert_eq!(
            groups.iter().map(|g| g.multiplicity).collect::<Vec<_>>(),
            vec![2, 1, 1]
        );
        let fine = group_multiplicities(&spectrum, Some(1e-6));
        assert_eq!(fine.len(), 4);
    }

    #[test]
    fn spectrum_serializes_with_provenance() {
        let spectrum = lyapunov_spectrum(&amo_cocycle(2.0, 0.0), 100, 2, Some(3)).unwrap();
        let json = serde_json::to_string(&spectrum).unwrap();
        assert!(json.contains("\"seed\":3"));
        assert!(json.contains("\"n_iters\":100"));
        assert!(json.contains("\"grid_samples\":1"));
    }
}
