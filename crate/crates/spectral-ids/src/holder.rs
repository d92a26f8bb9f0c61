//! Local Hölder-exponent estimation on an IDS curve.
//!
//! Around a target energy the symmetric increments N(E+eps) - N(E-eps) are
//! measured over dyadic scales and the exponent is the least-squares slope of
//! log increment against log scale. Scales whose increment falls below five
//! eigenvalues' worth of finite-volume resolution are discarded: below that
//! floor the curve is a staircase and the fit would measure discretization,
//! not regularity.

use serde::Serialize;

use crate::error::{Result, SpectralError};
use crate::ids::IdsCurve;

#[derive(Debug, Clone, Serialize)]
pub struct HolderFit {
    pub energy: f64,
    /// Fitted slope of log increments over usable scales.
    pub exponent: f64,
    /// Coefficient of determination of the log-log fit.
    pub r2: f64,
    pub scales: Vec<f64>,
    pub increments: Vec<f64>,
    /// Indices into `scales` that cleared the resolution floor.
    pub usable_scales: Vec<usize>,
}

/// Fit a local Hölder exponent to the curve at the given energy over
/// `scale_count` dyadic scales.
pub fn holder_fit(curve: &IdsCurve, energy: f64, scale_count: usize) -> Result<HolderFit> {
    if scale_count < 3 {
        return Err(SpectralError::InvalidParameter(
            "need at least 3 scales to fit a slope".into(),
        ));
    }
    let lo = *curve.energies.first().unwrap();
    let hi = *curve.energies.last().unwrap();
    let eps0 = 0.9 * (energy - lo).min(hi - energy);
    if !(eps0 > 0.0) {
        return Err(SpectralError::InvalidParameter(format!(
            "energy {energy} is not interior to the curve's grid [{lo}, {hi}]"
        )));
    }

    let floor = 5.0 / curve.dimension as f64;
    let mut scales = Vec::with_capacity(scale_count);
    let mut increments = Vec::with_capacity(scale_count);
    let mut usable = Vec::new();
    for k in 0..scale_count {
        let eps = eps0 / (1u64 << k) as f64;
        let inc = curve.interpolate(energy + eps) - curve.interpolate(energy - eps);
        if inc >= floor {
            usable.push(k);
        }
        scales.push(eps);
        increments.push(inc);
    }
    if usable.len() < 3 {
        return Err(SpectralError::InsufficientResolution {
            usable: usable.len(),
        });
    }

    let xs: Vec<f64> = usable.iter().map(|&k| scales[k].ln()).collect();
    let ys: Vec<f64> = usable.iter().map(|&k| increments[k].ln()).collect();
    let (slope, r2) = linear_fit(&xs, &ys);

    Ok(HolderFit {
        energy,
        exponent: slope,
        r2,
        scales,
        increments,
        usable_scales: usable,
    })
}

/// Least-squares slope and coefficient of determination.
fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, r2)
}
