//! Optimal matching between two spectra. A greedy nearest-neighbor match
//! can chain mistakes when eigenvalues cluster; the assignment solver makes
//! the total squared displacement globally minimal under the chosen metric.

use num_complex::Complex64;

use crate::assignment::min_cost_assignment;
use crate::error::{PerturbationError, Result};

/// Distance used to compare spectrum members.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairingMetric {
    /// |z - w| in the complex plane.
    Euclidean,
    /// Treats the real part as a circle coordinate mod 1 and the imaginary
    /// part as a line; distance is the circle gap plus the line gap.
    Phase,
}

impl PairingMetric {
    pub fn distance(self, z: Complex64, w: Complex64) -> f64 {
        match self {
            PairingMetric::Euclidean => (z - w).norm(),
            PairingMetric::Phase => {
                let gap = z.re - w.re;
                let circle = (gap - gap.round()).abs();
                circle + (z.im - w.im).abs()
            }
        }
    }
}

/// Result of matching `from[i]` with `to[assignment[i]]`, minimizing the
/// total squared metric distance.
#[derive(Debug, Clone)]
pub struct Pairing {
    pub assignment: Vec<usize>,
    /// Metric distance of each matched pair, indexed like `from`.
    pub distances: Vec<f64>,
    /// sqrt of the minimized sum of squared distances.
    pub total_cost: f64,
    pub max: f64,
}

/// Least-squares optimal matching between two equally long spectra.
pub fn pair_spectra(from: &[Complex64], to: &[Complex64], metric: PairingMetric) -> Result<Pairing> {
    if from.len() != to.len() {
        return Err(PerturbationError::DimensionMismatch(format!(
            "spectra have {} and {} members",
            from.len(),
            to.len()
        )));
    }
    if from.is_empty() {
        return Ok(Pairing {
            assignment: Vec::new(),
            distances: Vec::new(),
            total_cost: 0.0,
            max: 0.0,
        });
    }
    let cost: Vec<Vec<f64>> = from
        .iter()
        .map(|&z| {
            to.iter()
                .map(|&w| {
                    let d = metric.distance(z, w);
                    d * d
                })
                .collect()
        })
        .collect();
    let assignment = min_cost_assignment(&cost);
    let distances: Vec<f64> = assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| metric.distance(from[i], to[j]))
        .collect();
    let total_cost = distances.iter().map(|d| d * d).sum::<f64>().sqrt();
    let max = distances.iter().fold(0.0_f64, |a, &b| a.max(b));
    Ok(Pairing {
        assignment,
        distances,
        total_cost,
        max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn recovers_a_permutation_exactly() {
        let from = vec![c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.5)];
        let to = vec![c(-1.0, 0.5), c(1.0, 0.0), c(0.0, 1.0)];
        let pairing = pair_spectra(&from, &to, PairingMetric::Euclidean).unwrap();
        assert_eq!(pairing.assignment, vec![1, 2, 0]);
        assert!(pairing.total_cost < 1e-15);
    }

    #[test]
    fn beats_greedy_on_a_crossing_instance() {
        // Nearest-neighbor matching for 0.0 grabs 1.0 (distance 1 < 2) and
        // forces 2.0 onto -2.0, total squared cost 17; crossing costs 5.
        let from = vec![c(0.0, 0.0), c(2.0, 0.0)];
        let to = vec![c(1.0, 0.0), c(-2.0, 0.0)];
        let pairing = pair_spectra(&from, &to, PairingMetric::Euclidean).unwrap();
        assert_eq!(pairing.assignment, vec![1, 0]);
        assert!((pairing.total_cost - 5.0_f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn known_two_point_cost() {
        let from = vec![c(1.0, 0.0), c(2.0, 0.0)];
        let to = vec![c(2.1, 0.0), c(1.05, 0.0)];
        let pairing = pair_spectra(&from, &to, PairingMetric::Euclidean).unwrap();
        assert_eq!(pairing.assignment, vec![1, 0]);
        let expected = (0.05_f64.powi(2) + 0.1_f64.powi(2)).sqrt();
        assert!((pairing.total_cost - expected).abs() < 1e-14);
    }

    #[test]
    fn cost_is_minimal_against_sampled_permutations() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let from: Vec<Complex64> = (0..5)
                .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let to: Vec<Complex64> = (0..5)
                .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let best = pair_spectra(&from, &to, PairingMetric::Euclidean).unwrap();
            let best_sq = best.total_cost * best.total_cost;
            for _ in 0..100 {
                let mut perm: Vec<usize> = (0..5).collect();
                for i in (1..5).rev() {
                    perm.swap(i, rng.random_range(0..=i));
                }
                let cost: f64 = perm
                    .iter()
                    .enumerate()
                    .map(|(i, &j)| (from[i] - to[j]).norm_sqr())
                    .sum();
                assert!(best_sq <= cost + 1e-12);
            }
        }
    }

    #[test]
    fn phase_metric_wraps_the_circle() {
        let d = PairingMetric::Phase.distance(c(0.99, 0.0), c(0.01, 0.0));
        assert!((d - 0.02).abs() < 1e-14);
        let d = PairingMetric::Phase.distance(c(0.25, 0.3), c(0.25, -0.1));
        assert!((d - 0.4).abs() < 1e-14);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let err = pair_spectra(&[c(0.0, 0.0)], &[], PairingMetric::Euclidean).unwrap_err();
        assert!(matches!(err, PerturbationError::DimensionMismatch(_)));
    }
}
