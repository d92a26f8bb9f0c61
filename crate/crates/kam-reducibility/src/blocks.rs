//! Grouping of eigenphases and block diagonalization of the constant part.
//!
//! The constant matrix is brought to Schur form, its eigenphases are grouped
//! by the transitive closure of the cylinder distance at a chosen gap, the
//! triangular factor is reordered so groups sit in contiguous slots, and the
//! remaining coupling between groups is annihilated by a block Sylvester
//! solve. The result is a similarity P with P A P^{-1} block diagonal up to
//! a recorded remainder; the remainder is returned rather than discarded so
//! callers can fold it back into the perturbation and keep the conjugation
//! exact.

use fourier_core::{op_norm, CMat};
use num_complex::Complex64;

use crate::error::{KamError, Result};
use crate::phase::{schur_form, EigenPhase};

#[derive(Debug, Clone)]
pub struct BlockStructure {
    /// Eigenphases in block order; phases[i] belongs to diagonal slot i.
    pub phases: Vec<EigenPhase>,
    /// Half-open slot ranges of the diagonal blocks, covering 0..m.
    pub ranges: Vec<(usize, usize)>,
    /// Representative phase of each group (mean over members).
    pub reps: Vec<EigenPhase>,
    /// Similarity with P A P^{-1} block diagonal up to the remainder.
    pub p: CMat,
    pub p_inv: CMat,
    /// Upper-triangular diagonal blocks of P A P^{-1}.
    pub blocks: Vec<CMat>,
    /// P A P^{-1} minus its block-diagonal part.
    pub remainder: CMat,
    /// Largest remainder entry in absolute value.
    pub off_block_mass: f64,
    /// Operator-norm condition number of P.
    pub cond_p: f64,
    /// Gap used for grouping.
    pub gap: f64,
}

impl BlockStructure {
    pub fn dim(&self) -> usize {
        self.p.nrows()
    }

    pub fn group_count(&self) -> usize {
        self.ranges.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.ranges.iter().map(|&(s, e)| e - s).collect()
    }

    /// The block-diagonal part of P A P^{-1} assembled into a full matrix.
    pub fn block_diag(&self) -> CMat {
        let m = self.dim();
        let mut out = CMat::zeros(m, m);
        for (g, &(s, _)) in self.ranges.iter().enumerate() {
            let b = &self.blocks[g];
            for i in 0..b.nrows() {
                for j in 0..b.ncols() {
                    out[(s + i, s + j)] = b[(i, j)];
                }
            }
        }
        out
    }

    /// Group index owning a diagonal slot.
    pub fn group_of(&self, slot: usize) -> usize {
        self.ranges
            .iter()
            .position(|&(s, e)| slot >= s && slot < e)
            .expect("slot out of range")
    }
}

/// Group the eigenphases of `a` at the given gap and conjugate it to block
/// diagonal form.
pub fn block_diagonalize(a: &CMat, gap: f64) -> Result<BlockStructure> {
    let m = a.nrows();
    if m == 0 || a.ncols() != m {
        return Err(KamError::InvalidParameter(
            "block diagonalization needs a nonempty square matrix".into(),
        ));
    }
    if !(gap > 0.0) {
        return Err(KamError::InvalidParameter(format!(
            "grouping gap must be positive, got {gap}"
        )));
    }
    let scale = op_norm(a).max(1.0);

    // Already-triangular inputs keep Q = I so diagonal and Jordan-form
    // matrices come back with P = I exactly.
    let lower_mass: f64 = (0..m)
        .flat_map(|j| ((j + 1)..m).map(move |i| (i, j)))
        .map(|(i, j)| a[(i, j)].norm())
        .sum();
    let (mut q, mut t) = if lower_mass <= 1e-14 * scale {
        (CMat::identity(m, m), a.clone())
    } else {
        schur_form(a)?
    };

    let slot_phases = (0..m)
        .map(|i| EigenPhase::from_eigenvalue(t[(i, i)]))
        .collect::<Result<Vec<_>>>()?;

    // Transitive closure of the gap relation via union-find.
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let root = find(parent, parent[i]);
            parent[i] = root;
        }
        parent[i]
    }
    for i in 0..m {
        for j in (i + 1)..m {
            if slot_phases[i].distance(&slot_phases[j]) <= gap {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    // Groups ordered by first occurrence, members in Schur order, so inputs
    // that are already block ordered are left untouched.
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_to_group = vec![usize::MAX; m];
    for i in 0..m {
        let r = find(&mut parent, i);
        if root_to_group[r] == usize::MAX {
            root_to_group[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[root_to_group[r]].push(i);
    }

    // Bubble the triangular factor into group order with unitary swaps of
    // adjacent diagonal slots.
    let mut rank = vec![0usize; m];
    for (pos, orig) in groups.iter().flatten().enumerate() {
        rank[*orig] = pos;
    }
    let mut order: Vec<usize> = (0..m).collect();
    loop {
        let mut swapped = false;
        for i in 0..m.saturating_sub(1) {
            if rank[order[i]] > rank[order[i + 1]] {
                swap_adjacent(&mut t, &mut q, i);
                order.swap(i, i + 1);
                swapped = true;
            }
        }
        if !swapped {
            break;
        }
    }
    let phases: Vec<EigenPhase> = order.iter().map(|&o| slot_phases[o]).collect();

    let mut ranges = Vec::with_capacity(groups.len());
    let mut start = 0;
    for g in &groups {
        ranges.push((start, start + g.len()));
        start += g.len();
    }
    let group_of_slot: Vec<usize> = ranges
        .iter()
        .enumerate()
        .flat_map(|(g, &(s, e))| std::iter::repeat(g).take(e - s))
        .collect();

    // Peel groups off the triangular factor one at a time. Each Sylvester
    // solve zeroes the coupling row block and leaves both diagonal blocks
    // unchanged, so the factors stay exactly invertible.
    let mut s_total = CMat::identity(m, m);
    let mut s_inv_total = CMat::identity(m, m);
    for g in 0..ranges.len().saturating_sub(1) {
        let (gs, ge) = ranges[g];
        let x = solve_block_sylvester(&t, gs, ge, m, g, &group_of_slot)?;
        let mut factor = CMat::identity(m, m);
        let mut factor_inv = CMat::identity(m, m);
        for i in 0..(ge - gs) {
            for j in 0..(m - ge) {
                factor[(gs + i, ge + j)] = x[(i, j)];
                factor_inv[(gs + i, ge + j)] = -x[(i, j)];
            }
        }
        s_total = &s_total * &factor;
        s_inv_total = &factor_inv * &s_inv_total;
        for i in gs..ge {
            for j in ge..m {
                t[(i, j)] = Complex64::ZERO;
            }
        }
    }

    let p = &s_inv_total * q.adjoint();
    let p_inv = &q * &s_total;
    let cond_p = op_norm(&p) * op_norm(&p_inv);

    let conjugated = &p * a * &p_inv;
    let mut blocks = Vec::with_capacity(ranges.len());
    for &(s, e) in &ranges {
        blocks.push(conjugated.view((s, s), (e - s, e - s)).into_owned());
    }
    let mut remainder = conjugated.clone();
    let mut off_block_mass = 0.0f64;
    for &(s, e) in &ranges {
        for i in s..e {
            for j in s..e {
                remainder[(i, j)] = Complex64::ZERO;
            }
        }
    }
    for v in remainder.iter() {
        off_block_mass = off_block_mass.max(v.norm());
    }
    if off_block_mass > 1e-8 * scale {
        return Err(KamError::GroupingConditioning { gap });
    }

    let reps = ranges
        .iter()
        .map(|&(s, e)| mean_phase(&phases[s..e]))
        .collect();

    Ok(BlockStructure {
        phases,
        ranges,
        reps,
        p,
        p_inv,
        blocks,
        remainder,
        off_block_mass,
        cond_p,
        gap,
    })
}

/// Unitary swap of diagonal slots i and i+1 of the triangular factor,
/// accumulated into q.
fn swap_adjacent(t: &mut CMat, q: &mut CMat, i: usize) {
    let m = t.nrows();
    let a = t[(i, i)];
    let b = t[(i, i + 1)];
    let c = t[(i + 1, i + 1)];
    // [b, c - a] spans the eigenvector of the trailing eigenvalue; rotating
    // it into the leading slot swaps the diagonal.
    let v0 = b;
    let v1 = c - a;
    let nrm = (v0.norm_sqr() + v1.norm_sqr()).sqrt();
    let (g00, g01, g10, g11) = if nrm < 1e-300 {
        (
            Complex64::ZERO,
            Complex64::ONE,
            Complex64::ONE,
            Complex64::ZERO,
        )
    } else {
        (
            v0 / nrm,
            -v1.conj() / nrm,
            v1 / nrm,
            v0.conj() / nrm,
        )
    };
    // Columns i, i+1 of t and q pick up G on the right.
    for r in 0..m {
        let x = t[(r, i)];
        let y = t[(r, i + 1)];
        t[(r, i)] = x * g00 + y * g10;
        t[(r, i + 1)] = x * g01 + y * g11;
        let xq = q[(r, i)];
        let yq = q[(r, i + 1)];
        q[(r, i)] = xq * g00 + yq * g10;
        q[(r, i + 1)] = xq * g01 + yq * g11;
    }
    // Rows i, i+1 of t pick up G^H on the left.
    for col in 0..m {
        let x = t[(i, col)];
        let y = t[(i + 1, col)];
        t[(i, col)] = g00.conj() * x + g10.conj() * y;
        t[(i + 1, col)] = g01.conj() * x + g11.conj() * y;
    }
    t[(i + 1, i)] = Complex64::ZERO;
}

/// Solve T11 X - X T22 = -T12 for the leading group against the trailing
/// slots, by back-substitution over columns.
fn solve_block_sylvester(
    t: &CMat,
    gs: usize,
    ge: usize,
    m: usize,
    group: usize,
    group_of_slot: &[usize],
) -> Result<CMat> {
    let p = ge - gs;
    let n = m - ge;
    let mut x = CMat::zeros(p, n);
    for j in 0..n {
        let lambda = t[(ge + j, ge + j)];
        // rhs = -T12[:, j] + sum_{k<j} X[:, k] T22[k, j]
        let mut rhs = nalgebra::DVector::<Complex64>::zeros(p);
        for i in 0..p {
            rhs[i] = -t[(gs + i, ge + j)];
        }
        for k in 0..j {
            let coupling = t[(ge + k, ge + j)];
            if coupling != Complex64::ZERO {
                for i in 0..p {
                    rhs[i] += x[(i, k)] * coupling;
                }
            }
        }
        // (T11 - lambda I) x_j = rhs with T11 upper triangular.
        for i in (0..p).rev() {
            let mut acc = rhs[i];
            for k in (i + 1)..p {
                acc -= t[(gs + i, gs + k)] * x[(k, j)];
            }
            let pivot = t[(gs + i, gs + i)] - lambda;
            if pivot.norm() < 1e-12 {
                return Err(KamError::SylvesterConditioning {
                    first: group,
                    second: group_of_slot[ge + j],
                    gap: pivot.norm(),
                });
            }
            x[(i, j)] = acc / pivot;
        }
    }
    Ok(x)
}

/// Circle-aware mean of a cluster of phases, anchored at the first member.
fn mean_phase(members: &[EigenPhase]) -> EigenPhase {
    let anchor = members[0].rho;
    let mut re = 0.0;
    let mut im = 0.0;
    for p in members {
        let d = p.rho.re - anchor.re;
        re += anchor.re + (d - d.round());
        im += p.rho.im;
    }
    let k = members.len() as f64;
    EigenPhase {
        rho: Complex64::new((re / k).rem_euclid(1.0), im / k),
    }
}
