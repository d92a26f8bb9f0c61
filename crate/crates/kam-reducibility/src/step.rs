//! One step of the almost-reducibility iteration.
//!
//! A step takes the pair (A_j, f_j) with measured smallness eps and strip
//! h_j and produces (A_{j+1}, f_{j+1}) on the narrower strip h_{j+1}:
//!
//! 1. group the eigenvalues of A_j at the elimination threshold and
//!    block-diagonalize, folding the conjugation and its numerical
//!    remainder back into the perturbation so the conjugacy stays exact;
//! 2. remove every non-resonant mode by the quadratic fixed-point
//!    elimination;
//! 3. scan for resonant sites, build the torus rotation that moves each
//!    resonant mode onto the constant mode, and apply it;
//! 4. absorb the constant mode of the rotated perturbation into the new
//!    constant part A_{j+1} and re-expand the rest as f_{j+1}.
//!
//! Every stage is an exact conjugation up to series truncation, which is
//! why the step can be iterated down to machine precision: there is no
//! absolute error floor, only relative rounding on the deviations.

use std::f64::consts::TAU;

use fourier_core::{
    expm1_series, l1_norm, log1p_series, mat_exp, mat_expm1, op_norm, CMat, FourierMap,
    FrequencyVector,
};
use num_complex::Complex64;
use perturbation::{pair_spectra, PairingMetric};
use serde::{Deserialize, Serialize};

use crate::blocks::{block_diagonalize, BlockStructure};
use crate::error::{KamError, Result};
use crate::phase::{eigenphases, EigenPhase};
use crate::resonance::{scan_resonances, EliminationMask, ResonanceSite};
use crate::rotation::{apply_rotation, build_rotation, rotation_map};
use crate::schedule::{KamParams, KamSchedule};

/// Everything a step measured about itself.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepDiagnostics {
    /// Measured perturbation norm on the incoming strip.
    pub norm_f: f64,
    /// Smallness the quadratic schedule would assign to this step.
    pub scheduled_eps: f64,
    /// Elimination threshold used for grouping, masking and sites.
    pub threshold: f64,
    /// Diagnostic smallness scale eps^sigma.
    pub sigma_threshold: f64,
    /// Eigenvalue grouping gap actually used (threshold, possibly widened).
    pub grouping_gap: f64,
    pub grouping_retries: u32,
    pub group_sizes: Vec<usize>,
    /// Condition number of the block-diagonalizing conjugation.
    pub cond_p: f64,
    /// Off-block mass folded back into the perturbation.
    pub remainder_mass: f64,
    /// Allowed minus actual elimination gate value; negative would refuse.
    pub gate_margin: f64,
    /// Gate ratio the convergence proof would insist on, for comparison.
    pub proof_gate_ratio: f64,
    pub sweeps: usize,
    pub y_norm: f64,
    pub truncation_tail: f64,
    /// Homological solutions whose growth fell under the guaranteed bound.
    pub bound_violations: usize,
    pub sites: Vec<ResonanceSite>,
    /// First resonance-free window index.
    pub window_index: u32,
    pub scan_truncated: bool,
    /// Rotation vector per group.
    pub rotation: Vec<Vec<i64>>,
    /// Largest imaginary phase movement across the step.
    pub phase_drift_im: f64,
    /// ln |det A| plus the real trace of the constant perturbation mode;
    /// conserved by every exact conjugation.
    pub det_average: f64,
    pub b_norm: f64,
    /// Pointwise conjugacy residual against the original cocycle and the
    /// allowance it is compared to; filled by the iteration driver.
    pub conjugacy_residual: f64,
    pub residual_allowance: f64,
    pub warnings: Vec<String>,
}

impl StepDiagnostics {
    fn empty() -> Self {
        Self {
            norm_f: 0.0,
            scheduled_eps: 0.0,
            threshold: 0.0,
            sigma_threshold: 0.0,
            grouping_gap: 0.0,
            grouping_retries: 0,
            group_sizes: Vec::new(),
            cond_p: 1.0,
            remainder_mass: 0.0,
            gate_margin: 0.0,
            proof_gate_ratio: 0.0,
            sweeps: 0,
            y_norm: 0.0,
            truncation_tail: 0.0,
            bound_violations: 0,
            sites: Vec::new(),
            window_index: 0,
            scan_truncated: false,
            rotation: Vec::new(),
            phase_drift_im: 0.0,
            det_average: 0.0,
            b_norm: 1.0,
            conjugacy_residual: 0.0,
            residual_allowance: 0.0,
            warnings: Vec::new(),
        }
    }
}

/// The iteration state after j steps: the cocycle A e^f, the accumulated
/// conjugation B with B(x + alpha) A_0 e^{f_0(x)} B(x)^{-1} = A_j e^{f_j(x)},
/// the tracked eigenvalue phases of A, and the schedule position.
#[derive(Debug, Clone)]
pub struct KamState {
    pub j: usize,
    pub a: CMat,
    pub f: FourierMap,
    pub b: FourierMap,
    pub phases: Vec<EigenPhase>,
    /// Measured norm of f on the strip h.
    pub eps: f64,
    /// Current strip width h_j.
    pub h: f64,
    /// Mode cutoff for the next step.
    pub n_cutoff: f64,
    pub diagnostics: StepDiagnostics,
}

impl KamState {
    /// Initial state: B is the identity and the phases are read off A.
    pub fn initial(a: CMat, f: FourierMap, schedule: &KamSchedule) -> Result<Self> {
        let d = f.torus_dim();
        if f.matrix_dim() != a.nrows() || !a.is_square() {
            return Err(KamError::InvalidParameter(format!(
                "constant part is {}x{} but the perturbation acts on dimension {}",
                a.nrows(),
                a.ncols(),
                f.matrix_dim()
            )));
        }
        let eps = f.norm(schedule.h)?;
        let phases = eigenphases(&a)?;
        let b = FourierMap::identity(d, a.nrows(), 0, schedule.h)?;
        let mut diagnostics = StepDiagnostics::empty();
        diagnostics.norm_f = eps;
        diagnostics.scheduled_eps = schedule.eps0;
        diagnostics.det_average = det_average(&a, &f);
        Ok(Self {
            j: 0,
            a,
            f,
            b,
            phases,
            eps,
            h: schedule.h,
            n_cutoff: cutoff_for(eps, schedule, 0),
            diagnostics,
        })
    }
}

/// ln |det A| + Re tr f-hat(0); invariant under exact conjugation because a
/// conjugation changes neither the determinant of the cocycle nor the mean
/// of its logarithmic derivative.
pub fn det_average(a: &CMat, f: &FourierMap) -> f64 {
    a.determinant().norm().ln() + f.zero_mode().trace().re
}

/// Largest pointwise defect of B(x + alpha) A_0 e^{f_0(x)} B(x)^{-1}
/// against A_j e^{f_j(x)} over a uniform grid. Infinite when B degenerates.
pub fn conjugacy_residual(
    state: &KamState,
    a0: &CMat,
    f0: &FourierMap,
    alpha: &FrequencyVector,
) -> f64 {
    let d = f0.torus_dim();
    let per_dim: usize = match d {
        1 => 64,
        2 => 16,
        _ => 6,
    };
    let mut index = vec![0usize; d];
    let mut worst = 0.0_f64;
    loop {
        let x: Vec<f64> = index.iter().map(|&i| i as f64 / per_dim as f64).collect();
        let shifted: Vec<f64> = x
            .iter()
            .zip(alpha.components())
            .map(|(xi, ai)| xi + ai)
            .collect();
        let b_x = state.b.evaluate(&x);
        let Some(b_inv) = b_x.try_inverse() else {
            return f64::INFINITY;
        };
        let lhs = state.b.evaluate(&shifted) * a0 * mat_exp(&f0.evaluate(&x)) * b_inv;
        let rhs = &state.a * mat_exp(&state.f.evaluate(&x));
        worst = worst.max(op_norm(&(lhs - rhs)));
        // Odometer over the grid.
        let mut carry = 0;
        while carry < d {
            index[carry] += 1;
            if index[carry] < per_dim {
                break;
            }
            index[carry] = 0;
            carry += 1;
        }
        if carry == d {
            break;
        }
    }
    worst
}

fn cutoff_for(eps: f64, schedule: &KamSchedule, j: usize) -> f64 {
    let e = eps.max(f64::MIN_POSITIVE);
    2.0 * e.ln().abs() / schedule.strip_loss(j)
}

/// Apply a linear transform to every coefficient.
fn transform_modes<F: Fn(&CMat) -> CMat>(f: &FourierMap, op: F) -> Result<FourierMap> {
    let mut out = FourierMap::zero(f.torus_dim(), f.matrix_dim(), f.radius(), f.strip())?;
    for (n, c) in f.modes() {
        out.set_mode(n.to_vec(), op(c))?;
    }
    Ok(out)
}

/// Drop coefficients whose strip-weighted mass stays under `tol`, restating
/// the map on the narrower strip. Returns the dropped weighted mass.
fn prune_weighted(f: &FourierMap, strip: f64, tol: f64) -> Result<(FourierMap, f64)> {
    let mut out = FourierMap::zero(f.torus_dim(), f.matrix_dim(), f.radius(), strip)?;
    let mut dropped = 0.0;
    for (n, c) in f.modes() {
        let weighted = op_norm(c) * (TAU * strip * l1_norm(n) as f64).exp();
        if weighted > tol {
            out.set_mode(n.to_vec(), c.clone())?;
        } else {
            dropped += weighted;
        }
    }
    Ok((out, dropped))
}

/// Eigenvalue grouping at the elimination threshold, widened until the
/// conjugation is acceptably conditioned.
fn grouped_blocks(
    a: &CMat,
    threshold: f64,
    params: &KamParams,
) -> Result<(BlockStructure, u32)> {
    let mut gap = threshold;
    let mut retries = 0u32;
    loop {
        let widen = match block_diagonalize(a, gap) {
            Ok(blocks) => {
                if blocks.cond_p <= params.grouping_cond_cap || blocks.group_count() == 1 {
                    return Ok((blocks, retries));
                }
                true
            }
            Err(KamError::SylvesterConditioning { .. })
            | Err(KamError::GroupingConditioning { .. }) => true,
            Err(e) => return Err(e),
        };
        if widen {
            gap *= 2.0;
            retries += 1;
            if retries > 64 {
                return Err(KamError::GroupingConditioning { gap });
            }
        }
    }
}

/// One almost-reducibility step.
pub fn kam_step(
    state: &KamState,
    alpha: &FrequencyVector,
    schedule: &KamSchedule,
    params: &KamParams,
) -> Result<KamState> {
    let j = state.j;
    let d = state.f.torus_dim();
    let m = state.f.matrix_dim();
    if alpha.dim() != d {
        return Err(KamError::InvalidParameter(format!(
            "frequency has {} components but the perturbation lives on a {d}-torus",
            alpha.dim()
        )));
    }
    let h_now = state.h;
    let h_next = h_now - schedule.strip_loss(j);
    let eps_meas = state.f.norm(h_now)?;
    let n_cutoff = cutoff_for(eps_meas, schedule, j);

    // A vanished perturbation leaves nothing to do but advance the schedule.
    if eps_meas <= params.stop_tol {
        let mut diagnostics = StepDiagnostics::empty();
        diagnostics.norm_f = eps_meas;
        diagnostics.scheduled_eps = schedule.eps(j);
        diagnostics.det_average = det_average(&state.a, &state.f);
        diagnostics.b_norm = state.b.norm0();
        return Ok(KamState {
            j: j + 1,
            a: state.a.clone(),
            f: state.f.clone(),
            b: state.b.clone(),
            phases: state.phases.clone(),
            eps: eps_meas,
            h: h_next,
            n_cutoff: cutoff_for(eps_meas, schedule, j + 1),
            diagnostics,
        });
    }

    let mut warnings = Vec::new();
    let threshold = params.threshold(eps_meas);

    // The measured norm must be small against the elimination threshold
    // before any series is expanded; otherwise the step cannot contract
    // and the run ends here with a value instead of a series blow-up.
    let gate_actual = eps_meas.sqrt() * op_norm(&state.a).powi(2);
    let gate_allowed = params.gate_ratio * threshold;
    if gate_actual > gate_allowed {
        return Err(KamError::GateFailed {
            actual: gate_actual,
            allowed: gate_allowed,
        });
    }

    // Stage 1: group and block-diagonalize the constant part.
    let (blocks, grouping_retries) = grouped_blocks(&state.a, threshold, params)?;
    if grouping_retries > 0 {
        warnings.push(format!(
            "eigenvalue grouping widened {grouping_retries} times to gap {:.3e}",
            blocks.gap
        ));
    }
    let a_b = blocks.block_diag();
    let a_b_inv = a_b.clone().try_inverse().ok_or_else(|| {
        KamError::Singular("block-diagonal constant part is not invertible".into())
    })?;

    // Fold the conjugation by P and the block-diagonalization remainder R
    // into the perturbation: A e^f = P^{-1} (A_b + R) e^{P f P^{-1}} P and
    // (A_b + R) e^{f_p} = A_b e^{f_tilde} with
    // e^{f_tilde} = (I + C) e^{f_p}, C = A_b^{-1} R.
    let r_work = 16.max(4 * state.f.radius() + 8);
    let f_p = transform_modes(&state.f, |c| &blocks.p * c * &blocks.p_inv)?;
    let c_mat = &a_b_inv * &blocks.remainder;
    let (s_fp, tail_fp) = expm1_series(&f_p, r_work)?;
    let dev = FourierMap::constant(c_mat.clone(), d, 0, f_p.strip())?
        .try_add(&s_fp)?
        .try_add(&transform_modes(&s_fp, |c| &c_mat * c)?)?;
    let (f_tilde, tail_log) = log1p_series(&dev, r_work)?;

    // Stage 2: eliminate all non-resonant modes.
    let mask = EliminationMask::new(&blocks, alpha, threshold);
    let (y, f_re, report) =
        crate::elimination::remove_nonresonant(&a_b, &blocks, &f_tilde, &mask, alpha, params, r_work)?;

    // Stage 3: resonant sites and the renormalizing rotation.
    let scan = scan_resonances(&blocks, alpha, n_cutoff, threshold, params.scan_cap)?;
    if scan.scan_truncated {
        warnings.push(format!(
            "resonance scan clipped to |n|_1 <= {}",
            scan.scan_bound
        ));
    }
    let depth_bound: f64 = scan
        .sites
        .iter()
        .map(|s| l1_norm(&s.n) as f64)
        .sum::<f64>()
        .max(1.0);
    let ms = build_rotation(&scan.sites, blocks.group_count(), d, depth_bound)?;
    let f_rot = apply_rotation(&f_re, &ms, &blocks.ranges)?;

    // Stage 4: absorb the constant mode. With L = f_rot-hat(0),
    // A_{j+1} = Lambda A_b e^L and f_{j+1} = log(e^{-L} e^{f_rot}), where
    // Lambda carries the rotation twists e^{-2 pi i <m_k, alpha>}.
    let l_mat = f_rot.zero_mode();
    let r_next = 16.max(2 * f_rot.radius() + 8);
    let (s_rot, tail_rot) = expm1_series(&f_rot, r_next)?;
    let s1 = mat_expm1(&l_mat.scale(-1.0));
    let dev_next = FourierMap::constant(s1.clone(), d, 0, f_rot.strip())?
        .try_add(&s_rot)?
        .try_add(&transform_modes(&s_rot, |c| &s1 * c)?)?;
    let (f_next_raw, tail_next) = log1p_series(&dev_next, r_next)?;

    let mut a_rot = CMat::zeros(m, m);
    for (k, &(s, e)) in blocks.ranges.iter().enumerate() {
        let twist = Complex64::from_polar(1.0, -TAU * alpha.dot(&ms[k]));
        for row in s..e {
            for col in s..e {
                a_rot[(row, col)] = twist * blocks.blocks[k][(row - s, col - s)];
            }
        }
    }
    let a_next = &a_rot * mat_exp(&l_mat);

    // Weighted pruning keeps far-mode rounding dust from inflating the
    // exponentially weighted norm on later, wider supports.
    let norm_next_raw = f_next_raw.norm(h_next)?;
    let (f_next, pruned_mass) = prune_weighted(
        &f_next_raw,
        h_next,
        1e-18 * norm_next_raw.max(f64::MIN_POSITIVE),
    )?;
    let eps_next = f_next.norm(h_next)?;

    // Accumulated conjugation: B_{j+1} = Q (I + E_Y) P B_j.
    let q = rotation_map(&ms, &blocks.ranges, d, f_p.strip(), false)?;
    let (e_y, tail_b) = expm1_series(&y, r_work)?;
    let p_map = FourierMap::constant(blocks.p.clone(), d, 0, f_p.strip())?;
    let b_bar = q.try_mul(&p_map.try_add(&transform_modes(&e_y, |c| c * &blocks.p)?)?)?;
    let b_raw = b_bar.try_mul(&state.b)?;
    let b_next = b_raw.prune(1e-18 * b_raw.norm0().max(f64::MIN_POSITIVE));

    // Track each phase through the step by optimal matching.
    let new_phases = eigenphases(&a_next)?;
    let old_rho: Vec<Complex64> = state.phases.iter().map(|p| p.rho).collect();
    let new_rho: Vec<Complex64> = new_phases.iter().map(|p| p.rho).collect();
    let pairing = pair_spectra(&old_rho, &new_rho, PairingMetric::Phase)?;
    let phases: Vec<EigenPhase> = pairing
        .assignment
        .iter()
        .map(|&idx| new_phases[idx].clone())
        .collect();
    let metric = PairingMetric::Phase;
    let mut ambiguous = false;
    for i in 0..old_rho.len() {
        for l in (i + 1)..old_rho.len() {
            let (ai, al) = (pairing.assignment[i], pairing.assignment[l]);
            let kept = metric.distance(old_rho[i], new_rho[ai])
                + metric.distance(old_rho[l], new_rho[al]);
            let swapped = metric.distance(old_rho[i], new_rho[al])
                + metric.distance(old_rho[l], new_rho[ai]);
            if swapped - kept < 1e-12 * (1.0 + kept) {
                ambiguous = true;
            }
        }
    }
    if ambiguous {
        warnings.push("phase pairing is ambiguous; kept the least-cost assignment".into());
    }
    let phase_drift_im = phases
        .iter()
        .zip(&state.phases)
        .map(|(new, old)| (new.rho.im - old.rho.im).abs())
        .fold(0.0_f64, f64::max);

    let diagnostics = StepDiagnostics {
        norm_f: eps_meas,
        scheduled_eps: schedule.eps(j),
        threshold,
        sigma_threshold: eps_meas.powf(params.sigma),
        grouping_gap: blocks.gap,
        grouping_retries,
        group_sizes: blocks.sizes(),
        cond_p: blocks.cond_p,
        remainder_mass: blocks.off_block_mass,
        gate_margin: report.gate_margin,
        proof_gate_ratio: 13.0 * op_norm(&a_b).powi(2) * eps_meas.sqrt() / threshold,
        sweeps: report.sweeps,
        y_norm: report.y_norm0,
        truncation_tail: tail_fp
            + tail_log
            + tail_rot
            + tail_next
            + tail_b
            + report.truncation_tail
            + pruned_mass,
        bound_violations: report.solve.bound_violations,
        sites: scan.sites.clone(),
        window_index: scan.i0,
        scan_truncated: scan.scan_truncated,
        rotation: ms.clone(),
        phase_drift_im,
        det_average: det_average(&a_next, &f_next),
        b_norm: b_next.norm0(),
        conjugacy_residual: 0.0,
        residual_allowance: 0.0,
        warnings,
    };

    Ok(KamState {
        j: j + 1,
        a: a_next,
        f: f_next,
        b: b_next,
        phases,
        eps: eps_next,
        h: h_next,
        n_cutoff: cutoff_for(eps_next, schedule, j + 1),
        diagnostics,
    })
}
