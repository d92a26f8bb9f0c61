//! Quasi-periodic operator data and the finite-range transfer cocycle.
//!
//! One parameter set describes two operators in duality: a long-range one
//! whose hopping comes from the potential's Fourier coefficients and whose
//! diagonal samples the hopping symbol along a circle orbit, and a
//! finite-range one on the integer line with banded hopping and the
//! potential sampled along the torus orbit. The transfer construction turns
//! the finite-range eigenequation into a first-order recursion on 2m
//! consecutive amplitudes.

use fourier_core::{FourierMap, FrequencyVector, TrigPolynomial};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cocycle::Cocycle;
use crate::error::{EngineError, Result};

type CMat = DMatrix<Complex64>;

/// Which of the two dual operators a computation addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorFamily {
    /// Hopping from the potential's coefficients on the d-dimensional
    /// lattice, diagonal lambda * W along a circle orbit.
    LongRange,
    /// Banded hopping from the symbol W on the integer line, diagonal
    /// lambda_inv * V along a torus orbit.
    FiniteRange,
}

/// Shared parameter set for the dual pair of operators.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "SpecRepr", into = "SpecRepr")]
pub struct OperatorSpec {
    w: TrigPolynomial,
    v: FourierMap,
    lambda_inv: f64,
    lambda: f64,
    alpha: FrequencyVector,
}

impl OperatorSpec {
    /// Validate and build: W must be a real symmetric one-variable symbol
    /// with a genuine leading coefficient, V a real scalar map, couplings
    /// finite with lambda_inv >= 0 and lambda > 0.
    pub fn new(
        w: TrigPolynomial,
        v: FourierMap,
        lambda_inv: f64,
        lambda: f64,
        alpha: FrequencyVector,
    ) -> Result<Self> {
        if w.torus_dim() != 1 {
            return Err(EngineError::InvalidParameter(format!(
                "hopping symbol must be one-variable, got torus dimension {}",
                w.torus_dim()
            )));
        }
        let w_scale = w.modes().map(|(_, c)| c.norm()).fold(0.0_f64, f64::max);
        for (n, c) in w.modes() {
            let mirror = w.coeff(&[-n[0]]);
            if c.im.abs() > 1e-12 * w_scale.max(1.0)
                || (c - mirror).norm() > 1e-12 * w_scale.max(1.0)
            {
                return Err(EngineError::InvalidParameter(format!(
                    "hopping coefficients must be real and symmetric; mode {} breaks it",
                    n[0]
                )));
            }
        }
        if v.matrix_dim() != 1 {
            return Err(EngineError::InvalidParameter(format!(
                "potential must be scalar, got matrix dimension {}",
                v.matrix_dim()
            )));
        }
        if v.real_defect() > 1e-12 * v.norm0().max(1.0) {
            return Err(EngineError::InvalidParameter(
                "potential must be real-valued on the torus".into(),
            ));
        }
        if alpha.dim() != v.torus_dim() {
            return Err(EngineError::DimensionMismatch(format!(
                "frequency dimension {} vs potential torus dimension {}",
                alpha.dim(),
                v.torus_dim()
            )));
        }
        if !lambda_inv.is_finite() || lambda_inv < 0.0 {
            return Err(EngineError::InvalidParameter(format!(
                "lambda_inv must be finite and nonnegative, got {lambda_inv}"
            )));
        }
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(EngineError::InvalidParameter(format!(
                "lambda must be finite and positive, got {lambda}"
            )));
        }
        let spec = Self {
            w,
            v,
            lambda_inv,
            lambda,
            alpha,
        };
        if spec.half_bandwidth() == 0 {
            return Err(EngineError::InvalidParameter(
                "hopping symbol must have at least one nonconstant mode".into(),
            ));
        }
        Ok(spec)
    }

    pub fn hopping(&self) -> &TrigPolynomial {
        &self.w
    }

    pub fn potential(&self) -> &FourierMap {
        &self.v
    }

    pub fn lambda_inv(&self) -> f64 {
        self.lambda_inv
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn alpha(&self) -> &FrequencyVector {
        &self.alpha
    }

    /// Largest |k| whose hopping coefficient is nonzero.
    pub fn half_bandwidth(&self) -> i64 {
        self.w
            .modes()
            .filter(|(_, c)| c.norm() > 0.0)
            .map(|(n, _)| n[0].abs())
            .max()
            .unwrap_or(0)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecRepr {
    w: TrigPolynomial,
    v: FourierMap,
    lambda_inv: f64,
    lambda: f64,
    alpha: FrequencyVector,
}

impl TryFrom<SpecRepr> for OperatorSpec {
    type Error = EngineError;
    fn try_from(repr: SpecRepr) -> Result<Self> {
        OperatorSpec::new(repr.w, repr.v, repr.lambda_inv, repr.lambda, repr.alpha)
    }
}

impl From<OperatorSpec> for SpecRepr {
    fn from(spec: OperatorSpec) -> Self {
        SpecRepr {
            w: spec.w,
            v: spec.v,
            lambda_inv: spec.lambda_inv,
            lambda: spec.lambda,
            alpha: spec.alpha,
        }
    }
}

/// One step of the finite-range eigenequation at energy E and phase x: the
/// 2m x 2m companion matrix advancing (u_{n+m-1}, ..., u_{n-m}) to
/// (u_{n+m}, ..., u_{n-m+1}), where m is the hopping half-bandwidth. Row
/// one solves the recursion sum_k W_k u_{n-k} + lambda_inv V(x) u_n = E u_n
/// for u_{n+m}; the rows below shift.
pub fn build_transfer(spec: &OperatorSpec, energy: f64, x: &[f64]) -> Result<CMat> {
    let m = spec.half_bandwidth();
    let lead = spec.w.coeff(&[-m]);
    if lead.norm() < 1e-12 {
        return Err(EngineError::DegenerateHopping {
            magnitude: lead.norm(),
        });
    }
    let dim = (2 * m) as usize;
    let mut a = CMat::zeros(dim, dim);
    let v_here = spec.v.evaluate(x)[(0, 0)].re;
    for j in 0..dim {
        // Column j multiplies the amplitude at offset s from the center.
        let s = m - 1 - j as i64;
        a[(0, j)] = if s == 0 {
            (Complex64::new(energy - spec.lambda_inv * v_here, 0.0) - spec.w.coeff(&[0])) / lead
        } else {
            -spec.w.coeff(&[-s]) / lead
        };
    }
    for i in 1..dim {
        a[(i, i - 1)] = Complex64::ONE;
    }
    Ok(a)
}

/// The transfer construction as a cocycle over the torus rotation: the same
/// companion matrix with the potential entry kept as a map in x.
pub fn transfer_cocycle(spec: &OperatorSpec, energy: f64) -> Result<Cocycle> {
    let m = spec.half_bandwidth();
    let lead = spec.w.coeff(&[-m]);
    if lead.norm() < 1e-12 {
        return Err(EngineError::DegenerateHopping {
            magnitude: lead.norm(),
        });
    }
    let dim = (2 * m) as usize;
    let d = spec.v.torus_dim();
    let radius = if spec.lambda_inv > 0.0 {
        spec.v.radius()
    } else {
        0
    };
    let mut map = FourierMap::zero(d, dim, radius, spec.v.strip())?;

    let mut constant = CMat::zeros(dim, dim);
    for j in 0..dim {
        let s = m - 1 - j as i64;
        constant[(0, j)] = if s == 0 {
            (Complex64::new(energy, 0.0) - spec.w.coeff(&[0])) / lead
        } else {
            -spec.w.coeff(&[-s]) / lead
        };
    }
    for i in 1..dim {
        constant[(i, i - 1)] = Complex64::ONE;
    }
    map.set_mode(vec![0; d], constant)?;

    if spec.lambda_inv > 0.0 {
        let energy_col = (m - 1) as usize;
        let scale = -spec.lambda_inv / lead;
        for (n, c) in spec.v.modes() {
            let mut bump = CMat::zeros(dim, dim);
            bump[(0, energy_col)] = scale * c[(0, 0)];
            map.add_to_mode(n.to_vec(), bump)?;
        }
    }
    Cocycle::new(spec.alpha.clone(), map)
}
