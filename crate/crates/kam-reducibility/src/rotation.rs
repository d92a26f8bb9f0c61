//! Torus rotations that renormalize resonant modes.
//!
//! Each group l gets an integer vector m_l; the rotation
//! Q(x) = diag(e^{-2 pi i <m_l, x>} I) conjugates the cocycle so that the
//! resonant mode of every detected site lands on the constant mode. The
//! vectors are fixed by the site relations m_k - m_l = -n_{kl} along a
//! spanning forest of the resonance graph; groups outside the forest keep
//! m = 0, and redundant sites must agree with the forest exactly.

use fourier_core::{l1_norm, linf_norm, CMat, FourierMap};
use num_complex::Complex64;

use crate::error::{KamError, Result};
use crate::resonance::ResonanceSite;

/// Integer rotation vectors from the detected sites.
///
/// `depth_bound` is the largest l1 length any vector may reach (the site
/// count times the site cutoff); exceeding it means the sites were not a
/// consistent forest worth of data.
pub fn build_rotation(
    sites: &[ResonanceSite],
    group_count: usize,
    d: usize,
    depth_bound: f64,
) -> Result<Vec<Vec<i64>>> {
    let mut ms: Vec<Option<Vec<i64>>> = vec![None; group_count];
    let mut adjacency: Vec<Vec<(usize, Vec<i64>)>> = vec![Vec::new(); group_count];
    for site in sites {
        let (k, l) = site.pair;
        if k >= group_count || l >= group_count || site.n.len() != d {
            return Err(KamError::InvalidParameter(format!(
                "site ({k},{l}) with mode {:?} does not fit {group_count} groups in dimension {d}",
                site.n
            )));
        }
        // m_k - m_l = -n_{kl}, read in both directions.
        adjacency[k].push((l, site.n.clone()));
        adjacency[l].push((k, site.n.iter().map(|v| -v).collect()));
    }
    for root in 0..group_count {
        if ms[root].is_some() {
            continue;
        }
        ms[root] = Some(vec![0; d]);
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(k) = queue.pop_front() {
            let mk = ms[k].clone().expect("visited node carries a vector");
            for (l, n_kl) in &adjacency[k] {
                let ml: Vec<i64> = mk.iter().zip(n_kl).map(|(a, b)| a + b).collect();
                match &ms[*l] {
                    None => {
                        if l1_norm(&ml) as f64 > depth_bound {
                            return Err(KamError::InvalidParameter(format!(
                                "rotation vector {ml:?} exceeds the depth bound {depth_bound}"
                            )));
                        }
                        ms[*l] = Some(ml);
                        queue.push_back(*l);
                    }
                    Some(existing) => {
                        if *existing != ml {
                            return Err(KamError::CycleInconsistency {
                                k,
                                l: *l,
                                expected: ml,
                                found: existing.clone(),
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(ms.into_iter().map(|m| m.expect("all groups visited")).collect())
}

/// The rotation as a Fourier map: block l carries e^{-2 pi i <m_l, x>} I,
/// or the conjugate exponent for the inverse.
pub fn rotation_map(
    ms: &[Vec<i64>],
    ranges: &[(usize, usize)],
    d: usize,
    strip: f64,
    inverse: bool,
) -> Result<FourierMap> {
    let m = ranges.last().map(|&(_, e)| e).unwrap_or(0);
    let radius = ms.iter().map(|v| linf_norm(v)).max().unwrap_or(0);
    let mut q = FourierMap::zero(d, m, radius, strip)?;
    for (l, &(s, e)) in ranges.iter().enumerate() {
        let sign: i64 = if inverse { 1 } else { -1 };
        let mode: Vec<i64> = ms[l].iter().map(|v| sign * v).collect();
        let mut block = CMat::zeros(m, m);
        for i in s..e {
            block[(i, i)] = Complex64::ONE;
        }
        q.add_to_mode(mode, block)?;
    }
    Ok(q)
}

/// Conjugation Q f Q^{-1} carried out as exact mode shifts: the (k, l)
/// sub-block of the coefficient at n moves to n - m_k + m_l.
pub fn apply_rotation(
    f: &FourierMap,
    ms: &[Vec<i64>],
    ranges: &[(usize, usize)],
) -> Result<FourierMap> {
    let d = f.torus_dim();
    let m = f.matrix_dim();
    let max_shift = {
        let mut worst = 0i64;
        for a in ms {
            for b in ms {
                let shift: Vec<i64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
                worst = worst.max(linf_norm(&shift));
            }
        }
        worst
    };
    let mut out = FourierMap::zero(d, m, f.radius() + max_shift, f.strip())?;
    for (n, coeff) in f.modes() {
        for (k, &(ks, ke)) in ranges.iter().enumerate() {
            for (l, &(ls, le)) in ranges.iter().enumerate() {
                let mut sub = CMat::zeros(m, m);
                let mut mass = false;
                for i in ks..ke {
                    for j in ls..le {
                        if coeff[(i, j)] != Complex64::ZERO {
                            sub[(i, j)] = coeff[(i, j)];
                            mass = true;
                        }
                    }
                }
                if !mass {
                    continue;
                }
                let target: Vec<i64> = n
                    .iter()
                    .zip(ms[k].iter().zip(&ms[l]))
                    .map(|(&ni, (&mk, &ml))| ni - mk + ml)
                    .collect();
                out.add_to_mode(target, sub)?;
            }
        }
    }
    Ok(out)
}
