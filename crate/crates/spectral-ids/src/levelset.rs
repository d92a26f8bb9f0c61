//! Level-set structure of the hopping symbol on the complex torus.
//!
//! For a real trig polynomial W of degree m, the equation W(z) = E read as a
//! Laurent polynomial has 2m roots in the punctured plane, closed under
//! z -> 1/conj(z). Roots are classified as inside, on, or outside the unit
//! circle by comparing |ln |z|| against a ladder of windows of width
//! eta/(4m): with 2m roots and 2m+1 windows, some window is root-free, and
//! everything below it counts as on-circle. The on-circle count bounds the
//! local Hölder exponent of the IDS from below by its reciprocal.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use fourier_core::TrigPolynomial;

use crate::error::{Result, SpectralError};

/// Roots below this distance from the unit circle pair with themselves
/// under z -> 1/conj(z); used only by the scan that calibrates eta.
const ON_CIRCLE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct LevelSetReport {
    pub energy: f64,
    /// Gap parameter: off-circle roots stay at least this far (in modulus)
    /// from the unit circle over the calibrated energy range.
    pub eta: f64,
    /// Index of the root-free window in the ladder.
    pub i0: usize,
    pub zeros: Vec<Complex64>,
    pub z_plus: Vec<Complex64>,
    pub z_minus: Vec<Complex64>,
    pub z_zero: Vec<Complex64>,
    pub card_zero: usize,
}

/// All 2m roots of W(z) - E as a polynomial in z, via the companion matrix
/// of z^m (W(z) - E).
fn level_roots(w: &TrigPolynomial, energy: f64) -> Result<Vec<Complex64>> {
    let m = w.degree();
    if m < 1 {
        return Err(SpectralError::InvalidParameter(
            "sampling function must have positive degree".into(),
        ));
    }
    let lead = w.coeff(&[m]).re;
    if lead.abs() < 1e-12 {
        return Err(SpectralError::InvalidParameter(format!(
            "leading coefficient {lead:.3e} is numerically zero"
        )));
    }
    // Coefficients of sum_k c_j z^j, j = 0..2m, with c_{k+m} = W_k and the
    // energy subtracted at j = m.
    let deg = (2 * m) as usize;
    let mut coeffs = vec![0.0_f64; deg + 1];
    for (n, c) in w.modes() {
        coeffs[(n[0] + m) as usize] += c.re;
    }
    coeffs[m as usize] -= energy;

    let mut companion = DMatrix::<f64>::zeros(deg, deg);
    for j in 0..deg {
        companion[(0, j)] = -coeffs[deg - 1 - j] / lead;
        if j + 1 < deg {
            companion[(j + 1, j)] = 1.0;
        }
    }
    let roots = companion_eigenvalues(companion)?;
    if roots.iter().any(|z| !z.re.is_finite() || !z.im.is_finite() || z.norm() == 0.0) {
        return Err(SpectralError::Eigensolve(
            "companion eigensolve produced a degenerate root".into(),
        ));
    }
    Ok(roots)
}

/// Eigenvalues of a companion matrix with a bounded QR iteration. Sparse
/// symbols put several roots on a common modulus, where the Francis shift
/// strategy can cycle; a random orthogonal change of basis breaks the cycle
/// without moving the spectrum.
fn companion_eigenvalues(companion: DMatrix<f64>) -> Result<Vec<Complex64>> {
    use nalgebra::linalg::Schur;
    use rand::{Rng, SeedableRng};

    if let Some(schur) = Schur::try_new(companion.clone(), f64::EPSILON, 50_000) {
        return Ok(schur.complex_eigenvalues().iter().copied().collect());
    }
    let n = companion.nrows();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x1e7e);
    for _ in 0..3 {
        let basis = DMatrix::<f64>::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0))
            .qr()
            .q();
        let rotated = basis.transpose() * &companion * &basis;
        if let Some(schur) = Schur::try_new(rotated, f64::EPSILON, 50_000) {
            return Ok(schur.complex_eigenvalues().iter().copied().collect());
        }
    }
    Err(SpectralError::Eigensolve(
        "companion eigensolve did not converge".into(),
    ))
}

/// Calibrate the gap parameter over an energy range: the smallest distance
/// (in modulus above 1) that any off-circle root keeps from the unit circle,
/// scanned on a 201-point grid.
pub fn gap_parameter(w: &TrigPolynomial, e_lo: f64, e_hi: f64) -> Result<f64> {
    if !(e_hi > e_lo) {
        return Err(SpectralError::InvalidParameter(format!(
            "empty energy range [{e_lo}, {e_hi}]"
        )));
    }
    let mut eta = f64::INFINITY;
    for k in 0..201 {
        let e = e_lo + (e_hi - e_lo) * k as f64 / 200.0;
        for z in level_roots(w, e)? {
            let t = z.norm().ln().abs();
            if t > ON_CIRCLE_TOL {
                eta = eta.min(t.exp() - 1.0);
            }
        }
    }
    if !eta.is_finite() {
        // Every scanned root sat on the circle; any positive ladder works.
        eta = 0.5;
    }
    Ok(eta.max(1e-6))
}

/// Classify the level set of W at one energy. When `eta` is not supplied it
/// is calibrated over the numerical range of W widened by 1 on each side.
pub fn level_set_classify(
    w: &TrigPolynomial,
    energy: f64,
    eta: Option<f64>,
) -> Result<LevelSetReport> {
    let m = w.degree();
    let eta = match eta {
        Some(v) if v > 0.0 => v,
        Some(v) => {
            return Err(SpectralError::InvalidParameter(format!(
                "gap parameter must be positive, got {v}"
            )))
        }
        None => {
            let (lo, hi) = w.range_on_grid(4096);
            gap_parameter(w, lo - 1.0, hi + 1.0)?
        }
    };

    let zeros = level_roots(w, energy)?;
    let width = eta / (4 * m) as f64;

    // 2m roots cannot fill all 2m+1 windows; the first empty one separates
    // on-circle from off-circle.
    let mut occupied = vec![false; (2 * m + 1) as usize];
    for z in &zeros {
        let bucket = (z.norm().ln().abs() / width).floor() as usize;
        if bucket < occupied.len() {
            occupied[bucket] = true;
        }
    }
    let i0 = occupied
        .iter()
        .position(|o| !o)
        .expect("pigeonhole guarantees a free window");

    let cut = i0 as f64 * width;
    let mut z_plus = Vec::new();
    let mut z_minus = Vec::new();
    let mut z_zero = Vec::new();
    for &z in &zeros {
        let t = z.norm().ln();
        if t.abs() < cut {
            z_zero.push(z);
        } else if t > 0.0 {
            z_plus.push(z);
        } else {
            z_minus.push(z);
        }
    }

    if z_plus.len() != z_minus.len() {
        return Err(SpectralError::Eigensolve(format!(
            "root partition lost the inside/outside pairing: {} vs {}",
            z_plus.len(),
            z_minus.len()
        )));
    }
    for zp in &z_plus {
        let mirror = 1.0 / zp.conj();
        let matched = z_minus
            .iter()
            .any(|zm| (zm - mirror).norm() < 1e-8 * (1.0 + mirror.norm()));
        if !matched {
            return Err(SpectralError::Eigensolve(format!(
                "outside root {zp} has no inside partner near {mirror}"
            )));
        }
    }

    let card_zero = z_zero.len();
    Ok(LevelSetReport {
        energy,
        eta,
        i0,
        zeros,
        z_plus,
        z_minus,
        z_zero,
        card_zero,
    })
}

/// Per-energy lower bound on the Hölder exponent implied by the level-set
/// count: one over the on-circle cardinality, maximized over the adjacent
/// grid energies and rounded up to an even count.
#[derive(Debug, Clone, Serialize)]
pub struct HolderPrediction {
    pub energy: f64,
    pub card_zero: usize,
    /// Largest on-circle count among this energy and its grid neighbors.
    pub neighborhood_max: usize,
    /// 1 / neighborhood_max (even-rounded); 1.0 where the level set is
    /// empty and the curve is locally constant.
    pub predicted: f64,
}

/// Evaluate the predicted exponent floor on an energy grid.
pub fn predicted_holder(w: &TrigPolynomial, energies: &[f64]) -> Result<Vec<HolderPrediction>> {
    if energies.is_empty() {
        return Err(SpectralError::InvalidParameter(
            "energy grid is empty".into(),
        ));
    }
    let (lo, hi) = w.range_on_grid(4096);
    let scan_lo = lo.min(*energies.first().unwrap()) - 1.0;
    let scan_hi = hi.max(*energies.last().unwrap()) + 1.0;
    let eta = gap_parameter(w, scan_lo, scan_hi)?;

    let cards: Vec<usize> = energies
        .iter()
        .map(|&e| Ok(level_set_classify(w, e, Some(eta))?.card_zero))
        .collect::<Result<_>>()?;

    Ok(energies
        .iter()
        .enumerate()
        .map(|(i, &e)| {
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(cards.len() - 1);
            let neighborhood_max = *cards[lo..=hi].iter().max().unwrap();
            let even = neighborhood_max + neighborhood_max % 2;
            let predicted = if even == 0 { 1.0 } else { 1.0 / even as f64 };
            HolderPrediction {
                energy: e,
                card_zero: cards[i],
                neighborhood_max,
                predicted,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use std::collections::BTreeMap;

    fn cosine() -> TrigPolynomial {
        TrigPolynomial::cosine()
    }

    #[test]
    fn cosine_at_band_center_has_two_circle_roots() {
        let report = level_set_classify(&cosine(), 0.0, None).unwrap();
        assert_eq!(report.card_zero, 2);
        assert!(report.z_plus.is_empty());
        assert!(report.z_minus.is_empty());
        // Roots of z^2 + 1: plus and minus i.
        for z in &report.z_zero {
            assert!((z.norm() - 1.0).abs() < 1e-10);
            assert!(z.re.abs() < 1e-8);
            assert!((z.im.abs() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn cosine_off_the_band_splits_inside_outside() {
        let report = level_set_classify(&cosine(), 3.0, None).unwrap();
        assert_eq!(report.card_zero, 0);
        assert_eq!(report.z_plus.len(), 1);
        assert_eq!(report.z_minus.len(), 1);
        let golden = (3.0 + 5.0_f64.sqrt()) / 2.0;
        assert!((report.z_plus[0].norm() - golden).abs() < 1e-8);
        assert!((report.z_minus[0].norm() - 1.0 / golden).abs() < 1e-8);
    }

    /// Crossing count of W - E on a dense circular grid: each sign change
    /// of the sampled values is one transversal zero.
    fn sampled_crossings(w: &TrigPolynomial, values: &[f64], energy: f64) -> usize {
        let n = values.len();
        let _ = w;
        (0..n)
            .filter(|&k| {
                let a = values[k] - energy;
                let b = values[(k + 1) % n] - energy;
                a * b < 0.0
            })
            .count()
    }

    #[test]
    fn random_cubic_symbols_match_the_sampling_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        for _ in 0..10 {
            let mut modes = BTreeMap::new();
            for k in 1..=3i64 {
                let c = rng.random_range(-1.0..1.0);
                modes.insert(vec![k], Complex64::from(c / 2.0));
                modes.insert(vec![-k], Complex64::from(c / 2.0));
            }
            modes.insert(vec![0], Complex64::from(rng.random_range(-0.5..0.5)));
            let w = match TrigPolynomial::new(1, modes) {
                Ok(w) if w.degree() == 3 && w.coeff(&[3]).norm() > 1e-3 => w,
                _ => continue,
            };
            let grid = 100_000;
            let values: Vec<f64> = (0..grid)
                .map(|k| w.evaluate(&[k as f64 / grid as f64]))
                .collect();
            let (lo, hi) = w.range_on_grid(2048);
            let eta = gap_parameter(&w, lo - 1.0, hi + 1.0).unwrap();
            for _ in 0..20 {
                let e = rng.random_range(lo - 0.5..hi + 0.5);
                let report = level_set_classify(&w, e, Some(eta)).unwrap();
                let oracle = sampled_crossings(&w, &values, e);
                assert_eq!(
                    report.card_zero, oracle,
                    "level-set count disagrees with sampling at E={e}"
                );
            }
        }
    }

    #[test]
    fn cosine_prediction_is_one_half_on_the_band() {
        let grid: Vec<f64> = (0..21).map(|i| -1.8 + i as f64 * 0.18).collect();
        let predictions = predicted_holder(&cosine(), &grid).unwrap();
        for p in &predictions {
            assert_eq!(p.card_zero, 2);
            assert!((p.predicted - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn prediction_is_trivial_outside_the_band() {
        let predictions = predicted_holder(&cosine(), &[-4.0, 3.0, 4.0]).unwrap();
        for p in &predictions {
            assert_eq!(p.card_zero, 0);
            assert_eq!(p.predicted, 1.0);
        }
    }

    #[test]
    fn degree_three_wells_predict_one_sixth() {
        // 2 cos(3 theta) crosses every interior level six times.
        let w = TrigPolynomial::new(
            1,
            [(vec![3], Complex64::from(1.0)), (vec![-3], Complex64::from(1.0))]
                .into_iter()
                .collect(),
        )
        .unwrap();
        let report = level_set_classify(&w, 0.7, None).unwrap();
        assert_eq!(report.card_zero, 6);
        let predictions = predicted_holder(&w, &[0.5, 0.7, 0.9]).unwrap();
        for p in &predictions {
            assert!((p.predicted - 1.0 / 6.0).abs() < 1e-15);
        }
    }

    #[test]
    fn degenerate_leading_coefficient_is_rejected() {
        let w = TrigPolynomial::constant(1, 1.0);
        assert!(matches!(
            level_set_classify(&w, 0.0, None),
            Err(SpectralError::InvalidParameter(_))
        ));
    }
}
