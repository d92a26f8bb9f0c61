//! Integrated density of states from finite-volume eigenvalue counting.
//!
//! N(E) is the phase-averaged fraction of eigenvalues at or below E of the
//! operator truncated to a box with Dirichlet boundary. Phases come from a
//! deterministic grid, optionally mixed with seeded random points; phase
//! results reduce in index order so output is reproducible for any thread
//! count.

use cocycle_engine::{OperatorFamily, OperatorSpec};
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, SpectralError};
use crate::volume::{assemble_finite_volume, phase_dim, volume_dim};

/// An integrated-density-of-states curve on a fixed energy grid.
#[derive(Debug, Clone, Serialize)]
pub struct IdsCurve {
    pub energies: Vec<f64>,
    /// N(E) per grid energy, nondecreasing, within [0, 1].
    pub values: Vec<f64>,
    #[serde(rename = "box")]
    pub box_radius: i64,
    pub phase_samples: usize,
    pub family: OperatorFamily,
    /// Matrix dimension of each finite volume, the resolution unit of the
    /// curve: increments below 1/dimension are not meaningful.
    pub dimension: usize,
    pub seed: Option<u64>,
}

impl IdsCurve {
    /// Linear interpolation of N at an arbitrary energy, clamped at the
    /// grid ends.
    pub fn interpolate(&self, e: f64) -> f64 {
        let n = self.energies.len();
        if e <= self.energies[0] {
            return self.values[0];
        }
        if e >= self.energies[n - 1] {
            return self.values[n - 1];
        }
        let hi = self.energies.partition_point(|&x| x < e).max(1);
        let (e0, e1) = (self.energies[hi - 1], self.energies[hi]);
        let (v0, v1) = (self.values[hi - 1], self.values[hi]);
        if e1 == e0 {
            return v0;
        }
        v0 + (v1 - v0) * (e - e0) / (e1 - e0)
    }
}

/// Deterministic grid phases, with the back half replaced by seeded random
/// points when a seed is given.
pub(crate) fn phase_points(d: usize, count: usize, seed: Option<u64>) -> Vec<Vec<f64>> {
    let grid_count = match seed {
        None => count,
        Some(_) => count.div_ceil(2),
    };
    let mut points = Vec::with_capacity(count);
    if grid_count > 0 {
        let per_dim = (grid_count as f64).powf(1.0 / d as f64).ceil().max(1.0) as usize;
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
    if count > points.len() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed.unwrap_or(0));
        while points.len() < count {
            points.push((0..d).map(|_| rng.random_range(0.0..1.0)).collect());
        }
    }
    points
}

/// Compute the IDS on an energy grid by phase-averaged eigenvalue counting.
pub fn ids_curve(
    spec: &OperatorSpec,
    family: OperatorFamily,
    energies: &[f64],
    box_radius: i64,
    phase_samples: usize,
    seed: Option<u64>,
) -> Result<IdsCurve> {
    if energies.is_empty() {
        return Err(SpectralError::InvalidParameter(
            "energy grid is empty".into(),
        ));
    }
    if phase_samples < 1 {
        return Err(SpectralError::InvalidParameter(
            "phase sample count must be at least 1".into(),
        ));
    }
    let dimension = volume_dim(spec, family, box_radius);
    if dimension < 50 {
        return Err(SpectralError::InvalidParameter(format!(
            "box radius {box_radius} gives dimension {dimension}, need at least 50"
        )));
    }
    let mut grid = energies.to_vec();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let phases = phase_points(phase_dim(spec, family), phase_samples, seed);
    let per_phase: Vec<Vec<usize>> = phases
        .par_iter()
        .map(|x| assemble_finite_volume(spec, family, box_radius, x)?.counts_below(&grid))
        .collect::<Result<_>>()?;

    let scale = 1.0 / (dimension as f64 * phases.len() as f64);
    let values: Vec<f64> = (0..grid.len())
        .map(|i| per_phase.iter().map(|c| c[i] as f64).sum::<f64>() * scale)
        .collect();

    Ok(IdsCurve {
        energies: grid,
        values,
        box_radius,
        phase_samples,
        family,
        dimension,
        seed,
    })
}

/// Two sides of the duality between an operator and its Fourier transform:
/// the finite-range curve at E matches the long-range curve at lambda E.
#[derive(Debug, Clone, Serialize)]
pub struct DualityReport {
    pub finite_range: IdsCurve,
    pub long_range: IdsCurve,
    /// Worst |N_finite(E) - N_long(lambda E)| over the grid.
    pub sup_gap: f64,
}

/// Compare the IDS of the finite-range family against its long-range dual
/// on an energy grid given in finite-range units.
pub fn duality_check(
    spec: &OperatorSpec,
    energies: &[f64],
    box_radius: i64,
    phase_samples: usize,
    seed: Option<u64>,
) -> Result<DualityReport> {
    let finite_range = ids_curve(
        spec,
        OperatorFamily::FiniteRange,
        energies,
        box_radius,
        phase_samples,
        seed,
    )?;
    let mapped: Vec<f64> = finite_range
        .energies
        .iter()
        .map(|e| spec.lambda() * e)
        .collect();
    let long_range = ids_curve(
        spec,
        OperatorFamily::LongRange,
        &mapped,
        box_radius,
        phase_samples,
        seed,
    )?;
    let sup_gap = finite_range
        .values
        .iter()
        .zip(&long_range.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0_f64, f64::max);
    Ok(DualityReport {
        finite_range,
        long_range,
        sup_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use fourier_core::{FrequencyVector, TrigPolynomial};

    fn amo_spec(lambda: f64, lambda_inv: f64) -> OperatorSpec {
        OperatorSpec::new(
            TrigPolynomial::cosine(),
            TrigPolynomial::cosine().to_map(0.05).unwrap(),
            lambda_inv,
            lambda,
            FrequencyVector::golden_mean(),
        )
        .unwrap()
    }

    #[test]
    fn free_curve_hits_one_half_at_zero() {
        let spec = amo_spec(1.0, 0.0);
        let grid: Vec<f64> = (0..81).map(|i| -2.5 + i as f64 * 0.0625).collect();
        let curve = ids_curve(&spec, OperatorFamily::FiniteRange, &grid, 500, 2, None).unwrap();
        let at_zero = curve.interpolate(0.0);
        assert!(
            (at_zero - 0.5).abs() < 0.02,
            "free N(0) = {at_zero}, expected 1/2"
        );
    }

    #[test]
    fn curve_is_monotone_within_unit_interval_and_saturates() {
        let spec = amo_spec(1.5, 1.0 / 1.5);
        let grid: Vec<f64> = (0..41).map(|i| -6.0 + i as f64 * 0.3).collect();
        let curve = ids_curve(&spec, OperatorFamily::FiniteRange, &grid, 60, 3, Some(1)).unwrap();
        assert_eq!(curve.values.first(), Some(&0.0));
        assert_eq!(curve.values.last(), Some(&1.0));
        for pair in curve.values.windows(2) {
            assert!(pair[1] >= pair[0], "curve must be nondecreasing");
        }
        for v in &curve.values {
            assert!((0.0..=1.0).contains(v));
        }
    }

    #[test]
    fn unsorted_input_grid_is_sorted_in_the_output() {
        let spec = amo_spec(1.0, 0.0);
        let curve = ids_curve(
            &spec,
            OperatorFamily::FiniteRange,
            &[1.0, -1.0, 0.0],
            30,
            1,
            None,
        )
        .unwrap();
        assert_eq!(curve.energies, vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn undersized_box_is_rejected() {
        let spec = amo_spec(1.0, 0.0);
        let err = ids_curve(&spec, OperatorFamily::FiniteRange, &[0.0], 10, 1, None);
        assert!(matches!(err, Err(SpectralError::InvalidParameter(_))));
    }

    #[test]
    fn duality_pairs_the_cosine_family_with_its_transform() {
        // Coupling 2 on the long-range side, 1/2 on the finite-range side.
        let spec = amo_spec(2.0, 0.5);
        let grid: Vec<f64> = (0..61).map(|i| -3.0 + i as f64 * 0.1).collect();
        let report = duality_check(&spec, &grid, 200, 4, None).unwrap();
        assert!(
            report.sup_gap <= 0.02,
            "duality sup gap {} above tolerance",
            report.sup_gap
        );
    }

    #[test]
    fn interpolation_is_linear_between_nodes() {
        let curve = IdsCurve {
            energies: vec![0.0, 1.0, 2.0],
            values: vec![0.0, 0.4, 1.0],
            box_radius: 1,
            phase_samples: 1,
            family: OperatorFamily::FiniteRange,
            dimension: 1000,
            seed: None,
        };
        assert!((curve.interpolate(0.5) - 0.2).abs() < 1e-15);
        assert!((curve.interpolate(1.5) - 0.7).abs() < 1e-15);
        assert_eq!(curve.interpolate(-1.0), 0.0);
        assert_eq!(curve.interpolate(3.0), 1.0);
    }
}
