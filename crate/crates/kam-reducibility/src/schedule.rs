//! Step schedule and tuning parameters for the iteration.
//!
//! The schedule fixes the quadratic smallness sequence eps_{j+1} = eps_j^2,
//! the shrinking analyticity strips h_j with geometric losses
//! h_j - h_{j+1} = (h - h') / 4^{j+1}, and the induced mode cutoffs
//! N_j = 2 |ln eps_j| / (h_j - h_{j+1}). All three are computed by the
//! recursions themselves so consecutive values agree exactly in floating
//! point.

use serde::{Deserialize, Serialize};

use crate::error::{KamError, Result};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KamSchedule {
    /// Smallness bound at step zero.
    pub eps0: f64,
    /// Initial strip width.
    pub h: f64,
    /// Strip width retained in the limit.
    pub h_prime: f64,
}

impl KamSchedule {
    pub fn new(eps0: f64, h: f64, h_prime: f64) -> Result<Self> {
        if !(eps0 > 0.0 && eps0 < 1.0) {
            return Err(KamError::InvalidParameter(format!(
                "eps0 must lie in (0, 1), got {eps0}"
            )));
        }
        if !(0.0 < h_prime && h_prime < h) {
            return Err(KamError::InvalidParameter(format!(
                "strips must satisfy 0 < h' < h, got h' = {h_prime}, h = {h}"
            )));
        }
        Ok(Self { eps0, h, h_prime })
    }

    /// eps_j from the squaring recursion.
    pub fn eps(&self, j: usize) -> f64 {
        let mut e = self.eps0;
        for _ in 0..j {
            e *= e;
        }
        e
    }

    /// Strip width h_j.
    pub fn strip(&self, j: usize) -> f64 {
        let mut hj = self.h;
        for i in 0..j {
            hj -= self.strip_loss(i);
        }
        hj
    }

    /// The loss h_j - h_{j+1} = (h - h') / 4^{j+1}.
    pub fn strip_loss(&self, j: usize) -> f64 {
        (self.h - self.h_prime) / 4f64.powi(j as i32 + 1)
    }

    /// Mode cutoff N_j = 2 |ln eps_j| / (h_j - h_{j+1}). Infinite once eps_j
    /// underflows; callers cap it by the configured scan bound.
    pub fn cutoff(&self, j: usize) -> f64 {
        let e = self.eps(j);
        if e <= 0.0 {
            return f64::INFINITY;
        }
        2.0 * e.ln().abs() / self.strip_loss(j)
    }
}

/// Tuning knobs. The defaults target small analytic perturbations over
/// strongly irrational frequencies; every gate that the convergence proof
/// states with an absolute constant is exposed here as a ratio, and the
/// proof-side value is recorded in the step diagnostics for comparison.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KamParams {
    /// Exponent sigma in the diagnostic smallness scale eps^sigma.
    pub sigma: f64,
    /// Elimination threshold: min(threshold_cap, eps^threshold_exponent)
    /// with eps the measured perturbation norm.
    pub threshold_cap: f64,
    pub threshold_exponent: f64,
    /// Elimination gate: sqrt(masked norm) * |A|^2 <= gate_ratio * threshold.
    pub gate_ratio: f64,
    /// Largest l1 mode length any resonance scan enumerates.
    pub scan_cap: i64,
    /// Relative masked-residual target of the elimination fixed point.
    pub fixed_point_tol: f64,
    /// Sweep budget of the elimination fixed point.
    pub max_sweeps: usize,
    /// Iteration stops once the measured perturbation norm falls below this.
    pub stop_tol: f64,
    /// Grouping is retried with a doubled gap above this conditioning.
    pub grouping_cond_cap: f64,
}

impl Default for KamParams {
    fn default() -> Self {
        Self {
            sigma: 0.01,
            threshold_cap: 0.05,
            threshold_exponent: 0.25,
            gate_ratio: 8.0,
            scan_cap: 4096,
            fixed_point_tol: 1e-12,
            max_sweeps: 50,
            stop_tol: 1e-13,
            grouping_cond_cap: 1e8,
        }
    }
}

impl KamParams {
    /// Elimination threshold for a measured perturbation norm.
    pub fn threshold(&self, eps: f64) -> f64 {
        let eps = eps.max(f64::MIN_POSITIVE);
        self.threshold_cap.min(eps.powf(self.threshold_exponent))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eps_follows_the_squaring_recursion_exactly() {
        let s = KamSchedule::new(1e-5, 0.02, 0.01).unwrap();
        for j in 0..6 {
            let e = s.eps(j);
            assert_eq!(s.eps(j + 1), e * e);
        }
    }

    #[test]
    fn strip_losses_are_exact_quarters() {
        let s = KamSchedule::new(1e-4, 0.5, 0.1).unwrap();
        for j in 0..10 {
            assert_eq!(s.strip(j) - s.strip_loss(j), s.strip(j + 1));
            assert_eq!(s.strip_loss(j), 0.4 / 4f64.powi(j as i32 + 1));
        }
        // Total loss stays below the geometric limit (h - h') / 3.
        assert!(s.strip(30) > s.h - (s.h - s.h_prime) / 3.0 - 1e-12);
        assert!(s.strip(30) > s.h_prime);
    }

    #[test]
    fn cutoff_matches_the_closed_form() {
        let s = KamSchedule::new(1e-5, 0.02, 0.01).unwrap();
        let expected = 2.0 * (1e-5f64).ln().abs() / (0.01 / 4.0);
        assert!((s.cutoff(0) - expected).abs() < 1e-9 * expected);
        // Underflowed eps gives an infinite cutoff rather than a panic.
        assert!(s.cutoff(12).is_infinite());
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(KamSchedule::new(0.0, 0.2, 0.1).is_err());
        assert!(KamSchedule::new(1.5, 0.2, 0.1).is_err());
        assert!(KamSchedule::new(1e-3, 0.1, 0.2).is_err());
        assert!(KamSchedule::new(1e-3, 0.1, 0.0).is_err());
    }

    #[test]
    fn threshold_caps_large_perturbations() {
        let p = KamParams::default();
        assert_eq!(p.threshold(1.0), 0.05);
        let eps = 1e-8;
        assert!((p.threshold(eps) - eps.powf(0.25)).abs() < 1e-12);
    }
}
