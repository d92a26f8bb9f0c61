//! Frequency vectors on the torus and brute-force Diophantine certification.

use serde::{Deserialize, Serialize};

use crate::error::{FourierError, Result};

/// Distance from `t` to the nearest integer, i.e. the R/Z norm.
pub fn dist_to_integers(t: f64) -> f64 {
    (t - t.round()).abs()
}

/// The l^1 norm of an integer mode vector.
pub fn l1_norm(n: &[i64]) -> i64 {
    n.iter().map(|k| k.abs()).sum()
}

/// Largest absolute component, the box norm used for truncation radii.
pub fn linf_norm(n: &[i64]) -> i64 {
    n.iter().map(|k| k.abs()).max().unwrap_or(0)
}

/// Translation vector alpha in R^d defining the torus rotation x -> x + alpha.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FrequencyVector {
    alpha: Vec<f64>,
}

impl FrequencyVector {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(FourierError::InvalidParameter(
                "frequency vector must have at least one component".into(),
            ));
        }
        if alpha.iter().any(|a| !a.is_finite()) {
            return Err(FourierError::NotFinite("frequency vector".into()));
        }
        Ok(Self { alpha })
    }

    /// The inverse golden mean (sqrt(5) - 1)/2 as a one-dimensional frequency.
    pub fn golden_mean() -> Self {
        Self {
            alpha: vec![(5.0_f64.sqrt() - 1.0) / 2.0],
        }
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    pub fn components(&self) -> &[f64] {
        &self.alpha
    }

    /// Inner product <n, alpha> for an integer mode vector.
    pub fn dot(&self, n: &[i64]) -> f64 {
        debug_assert_eq!(n.len(), self.alpha.len());
        n.iter()
            .zip(&self.alpha)
            .map(|(&k, &a)| k as f64 * a)
            .sum()
    }

    /// One rotation step: x + alpha reduced mod 1 componentwise.
    pub fn step(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.alpha)
            .map(|(&xi, &ai)| (xi + ai).rem_euclid(1.0))
            .collect()
    }
}

/// Parameters of the Diophantine condition
/// inf_j |<n, alpha> - j| > kappa / |n|_1^tau for all 0 < |n|_1 <= cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiophantineParams {
    pub kappa: f64,
    pub tau: f64,
    pub cutoff: i64,
}

/// Outcome of a brute-force Diophantine scan.
///
/// `margin` is the worst ratio dist(<n,alpha>) * |n|_1^tau / kappa over the
/// scanned range; the condition holds on that range iff margin > 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiophantineReport {
    pub passed: bool,
    pub worst_n: Vec<i64>,
    pub margin: f64,
    /// min over scanned n of dist(<n,alpha>) * |n|_1^tau, i.e. the largest
    /// kappa for which the condition would still hold on this range.
    pub kappa_effective: f64,
}

/// Enumerate all n with 0 < |n|_1 <= cutoff up to the n <-> -n symmetry
/// (first nonzero component positive) and report the worst small divisor.
pub fn check_diophantine(
    alpha: &FrequencyVector,
    params: &DiophantineParams,
) -> Result<DiophantineReport> {
    if params.kappa <= 0.0 || params.tau <= 0.0 || params.cutoff < 1 {
        return Err(FourierError::InvalidParameter(
            "diophantine scan needs kappa > 0, tau > 0, cutoff >= 1".into(),
        ));
    }
    let d = alpha.dim();
    let mut worst_n = vec![0i64; d];
    let mut kappa_eff = f64::INFINITY;

    let mut n = vec![0i64; d];
    enumerate_modes(&mut n, 0, params.cutoff, &mut |n| {
        if is_canonical_half(n) {
            let norm = l1_norm(n) as f64;
            let value = dist_to_integers(alpha.dot(n)) * norm.powf(params.tau);
            if value < kappa_eff {
                kappa_eff = value;
                worst_n = n.to_vec();
            }
        }
    });

    let margin = kappa_eff / params.kappa;
    Ok(DiophantineReport {
        passed: margin > 1.0,
        worst_n,
        margin,
        kappa_effective: kappa_eff,
    })
}

/// True for exactly one of {n, -n}: the first nonzero component is positive.
fn is_canonical_half(n: &[i64]) -> bool {
    for &k in n {
        if k > 0 {
            return true;
        }
        if k < 0 {
            return false;
        }
    }
    false
}

/// Visit every mode with |n|_1 <= budget, including n = 0.
pub fn enumerate_modes(n: &mut Vec<i64>, pos: usize, budget: i64, visit: &mut impl FnMut(&[i64])) {
    if pos == n.len() {
        visit(n);
        return;
    }
    for k in -budget..=budget {
        n[pos] = k;
        enumerate_modes(n, pos + 1, budget - k.abs(), visit);
    }
    n[pos] = 0;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_mean_satisfies_standard_condition() {
        let alpha = FrequencyVector::golden_mean();
        let report = check_diophantine(
            &alpha,
            &DiophantineParams {
                kappa: 0.1,
                tau: 2.0,
                cutoff: 100,
            },
        )
        .unwrap();
        assert!(report.passed, "margin {}", report.margin);
        // Continued-fraction worst case: dist(q alpha) ~ 1/(sqrt(5) q), so
        // dist * q^2 ~ q / sqrt(5) grows. The minimum is at small Fibonacci q.
        assert!(report.kappa_effective > 0.1 && report.kappa_effective < 1.0);
    }

    #[test]
    fn two_frequency_quadratic_pair_passes() {
        let alpha =
            FrequencyVector::new(vec![2.0_f64.sqrt() - 1.0, 3.0_f64.sqrt() - 1.0]).unwrap();
        let report = check_diophantine(
            &alpha,
            &DiophantineParams {
                kappa: 1e-3,
                tau: 3.0,
                cutoff: 50,
            },
        )
        .unwrap();
        assert!(report.passed, "margin {}", report.margin);
    }

    #[test]
    fn rational_frequency_fails() {
        let alpha = FrequencyVector::new(vec![0.5]).unwrap();
        let report = check_diophantine(
            &alpha,
            &DiophantineParams {
                kappa: 1e-6,
                tau: 2.0,
                cutoff: 10,
            },
        )
        .unwrap();
        assert!(!report.passed);
        assert_eq!(report.worst_n, vec![2]);
        assert_eq!(report.kappa_effective, 0.0);
    }

    #[test]
    fn mode_enumeration_counts_l1_ball() {
        let mut n = vec![0i64; 2];
        let mut count = 0usize;
        enumerate_modes(&mut n, 0, 3, &mut |_| count += 1);
        // |n|_1 <= 3 in Z^2: 1 + 4 + 8 + 12 = 25 points.
        assert_eq!(count, 25);
    }

    #[test]
    fn rotation_step_wraps_mod_one() {
        let alpha = FrequencyVector::new(vec![0.7, 0.6]).unwrap();
        let x = alpha.step(&[0.5, 0.9]);
        assert!((x[0] - 0.2).abs() < 1e-15);
        assert!((x[1] - 0.5).abs() < 1e-15);
    }
}
