//! Resonance detection between eigenphase groups and the elimination mask.
//!
//! A pair of groups (k, l) is resonant at the integer mode n when the
//! representative phase difference lies within the threshold of <n, alpha>
//! on the cylinder. Detected sites drive the rotation that renormalizes the
//! resonant modes; the elimination mask is the complementary predicate that
//! marks which perturbation modes have denominators large enough to remove.
//!
//! Window occupancy is recorded over the l1 annuli [N^i, N^{i+1}) for
//! i = 1..m^2 and the first window with no observed resonance is selected.
//! Only modes up to the configured scan cap are enumerated; windows beyond
//! the scanned range count as unoccupied.

use fourier_core::{dist_to_integers, enumerate_modes, l1_norm, FrequencyVector};
use serde::{Deserialize, Serialize};

use crate::blocks::BlockStructure;
use crate::error::{KamError, Result};

/// One detected resonance between a pair of groups.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResonanceSite {
    /// Group indices (k, l) with k < l.
    pub pair: (usize, usize),
    /// The resonant mode, with <n, alpha> closest to the phase difference.
    pub n: Vec<i64>,
    /// Achieved cylinder distance between the phase difference and <n, alpha>.
    pub margin: f64,
    /// False when another sub-threshold mode was seen in the scanned range.
    pub unique: bool,
}

/// Result of a resonance scan.
#[derive(Debug, Clone)]
pub struct ResonanceScan {
    /// Shortest resonant mode per pair; length ties broken by margin.
    pub sites: Vec<ResonanceSite>,
    /// Selected window index in [1, m^2]; the window [N^{i0}, N^{i0+1})
    /// contains no observed resonance.
    pub i0: u32,
    /// Occupancy of the windows i = 1..m^2.
    pub occupied: Vec<bool>,
    /// Largest l1 mode length enumerated.
    pub scan_bound: i64,
    /// True when the cap clipped the nominal range N^{m^2 + 1}.
    pub scan_truncated: bool,
}

/// Scan all group pairs for resonances below `threshold`.
///
/// `n_cutoff` is the schedule cutoff N; sites are only accepted with
/// |n|_1 <= N while occupancy is recorded across the scanned annuli.
pub fn scan_resonances(
    blocks: &BlockStructure,
    alpha: &FrequencyVector,
    n_cutoff: f64,
    threshold: f64,
    scan_cap: i64,
) -> Result<ResonanceScan> {
    if !(threshold > 0.0) {
        return Err(KamError::InvalidParameter(format!(
            "resonance threshold must be positive, got {threshold}"
        )));
    }
    if scan_cap < 1 {
        return Err(KamError::InvalidParameter(format!(
            "scan cap must be at least 1, got {scan_cap}"
        )));
    }
    let m = blocks.dim();
    let r = blocks.group_count();
    let windows = m * m;
    let n_eff = n_cutoff.max(1.0);
    let nominal = n_eff.powi(windows as i32 + 1);
    let scan_truncated = nominal > scan_cap as f64;
    let scan_bound = if scan_truncated {
        scan_cap
    } else {
        nominal.floor() as i64
    };
    let site_bound = n_eff.min(scan_cap as f64);

    let mut sites = Vec::new();
    let mut occupied = vec![false; windows];
    for k in 0..r {
        for l in (k + 1)..r {
            let dk = blocks.reps[k].rho - blocks.reps[l].rho;
            let mut best: Option<(f64, Vec<i64>)> = None;
            let mut hits = 0usize;
            let mut scratch = vec![0i64; alpha.dim()];
            enumerate_modes(&mut scratch, 0, scan_bound, &mut |n| {
                if n.iter().all(|&c| c == 0) {
                    return;
                }
                let margin = dist_to_integers(dk.re - alpha.dot(n)) + dk.im.abs();
                if margin < threshold {
                    hits += 1;
                    let len = l1_norm(n) as f64;
                    // Occupancy over the annuli [N^i, N^{i+1}).
                    for i in 1..=windows {
                        if len >= n_eff.powi(i as i32) && len < n_eff.powi(i as i32 + 1) {
                            occupied[i - 1] = true;
                        }
                    }
                    if len <= site_bound {
                        // The shortest resonant mode is the one the rotation
                        // collapses; distant sub-threshold modes always exist
                        // over a dense orbit but carry no mass in the working
                        // band and would cost exponential strip weight.
                        let better = match &best {
                            None => true,
                            Some((b, bn)) => {
                                let cur = l1_norm(n);
                                let old = l1_norm(bn);
                                cur < old || (cur == old && margin < *b)
                            }
                        };
                        if better {
                            best = Some((margin, n.to_vec()));
                        }
                    }
                }
            });
            if let Some((margin, n)) = best {
                sites.push(ResonanceSite {
                    pair: (k, l),
                    n,
                    margin,
                    unique: hits == 1,
                });
            }
        }
    }

    let i0 = match occupied.iter().position(|o| !o) {
        Some(idx) => (idx + 1) as u32,
        None => return Err(KamError::WindowsExhausted { windows }),
    };
    debug_assert!(!occupied[i0 as usize - 1]);

    Ok(ResonanceScan {
        sites,
        i0,
        occupied,
        scan_bound,
        scan_truncated,
    })
}

/// Predicate marking which modes of which block pairs the homological solve
/// may eliminate: the cylinder distance between every member phase pair and
/// the integers must reach the threshold.
pub struct EliminationMask<'a> {
    blocks: &'a BlockStructure,
    alpha: &'a FrequencyVector,
    pub threshold: f64,
}

impl<'a> EliminationMask<'a> {
    pub fn new(blocks: &'a BlockStructure, alpha: &'a FrequencyVector, threshold: f64) -> Self {
        Self {
            blocks,
            alpha,
            threshold,
        }
    }

    /// Smallest denominator the solve would meet on block pair (k, l) at
    /// mode n: min over member phases of ||Re(rho - rho') + <n, alpha>||
    /// plus the growth-rate mismatch.
    pub fn denominator(&self, k: usize, l: usize, n: &[i64]) -> f64 {
        let dot = self.alpha.dot(n);
        let (ks, ke) = self.blocks.ranges[k];
        let (ls, le) = self.blocks.ranges[l];
        let mut min = f64::INFINITY;
        for i in ks..ke {
            for j in ls..le {
                let d = self.blocks.phases[i].rho - self.blocks.phases[j].rho;
                let delta = dist_to_integers(d.re + dot) + d.im.abs();
                if delta < min {
                    min = delta;
                }
            }
        }
        min
    }

    pub fn eliminable(&self, k: usize, l: usize, n: &[i64]) -> bool {
        self.denominator(k, l, n) >= self.threshold
    }
}
