//! Matrix-valued trigonometric polynomials on the d-torus, stored by their
//! Fourier coefficients on the box |n|_inf <= radius. The weighted norm
//! sum_n |c(n)|_op e^{2 pi h |n|_1} controls the analytic continuation to the
//! strip |Im x_j| <= h, and every algebraic operation tracks the radius and
//! strip so truncation stays explicit.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{FourierError, Result};
use crate::frequency::{l1_norm, linf_norm, FrequencyVector};
use crate::matfn::op_norm;

pub type CMat = DMatrix<Complex64>;

const TAU: f64 = std::f64::consts::TAU;

/// Finite Fourier series x -> sum_n c(n) e^{2 pi i <n, x>} with m x m complex
/// coefficients supported on |n|_inf <= radius.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "MapRepr", into = "MapRepr")]
pub struct FourierMap {
    d: usize,
    m: usize,
    radius: i64,
    strip: f64,
    coeffs: BTreeMap<Vec<i64>, CMat>,
}

impl FourierMap {
    /// Empty map (identically zero).
    pub fn zero(d: usize, m: usize, radius: i64, strip: f64) -> Result<Self> {
        if d == 0 || m == 0 {
            return Err(FourierError::InvalidParameter(
                "torus dimension and matrix size must be positive".into(),
            ));
        }
        if radius < 0 {
            return Err(FourierError::InvalidParameter(format!(
                "mode radius must be nonnegative, got {radius}"
            )));
        }
        if !(strip >= 0.0) || !strip.is_finite() {
            return Err(FourierError::InvalidParameter(format!(
                "strip width must be finite and nonnegative, got {strip}"
            )));
        }
        Ok(Self {
            d,
            m,
            radius,
            strip,
            coeffs: BTreeMap::new(),
        })
    }

    /// Constant map with the given value at every point of the torus.
    pub fn constant(value: CMat, d: usize, radius: i64, strip: f64) -> Result<Self> {
        if value.nrows() != value.ncols() || value.nrows() == 0 {
            return Err(FourierError::DimensionMismatch(format!(
                "constant coefficient must be square and nonempty, got {}x{}",
                value.nrows(),
                value.ncols()
            )));
        }
        let mut map = Self::zero(d, value.nrows(), radius, strip)?;
        map.set_mode(vec![0; d], value)?;
        Ok(map)
    }

    /// Constant identity map.
    pub fn identity(d: usize, m: usize, radius: i64, strip: f64) -> Result<Self> {
        Self::constant(CMat::identity(m, m), d, radius, strip)
    }

    pub fn torus_dim(&self) -> usize {
        self.d
    }

    pub fn matrix_dim(&self) -> usize {
        self.m
    }

    pub fn radius(&self) -> i64 {
        self.radius
    }

    pub fn strip(&self) -> f64 {
        self.strip
    }

    /// Number of stored modes.
    pub fn support_size(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Iterate stored modes in lexicographic order.
    pub fn modes(&self) -> impl Iterator<Item = (&[i64], &CMat)> {
        self.coeffs.iter().map(|(n, c)| (n.as_slice(), c))
    }

    pub fn mode(&self, n: &[i64]) -> Option<&CMat> {
        self.coeffs.get(n)
    }

    /// The average over the torus (the coefficient at n = 0).
    pub fn zero_mode(&self) -> CMat {
        self.coeffs
            .get(vec![0; self.d].as_slice())
            .cloned()
            .unwrap_or_else(|| CMat::zeros(self.m, self.m))
    }

    /// Install a coefficient, replacing any previous value at that mode.
    pub fn set_mode(&mut self, n: Vec<i64>, value: CMat) -> Result<()> {
        self.check_mode(&n, &value)?;
        if value.iter().all(|v| v.norm() == 0.0) {
            self.coeffs.remove(&n);
        } else {
            self.coeffs.insert(n, value);
        }
        Ok(())
    }

    /// Add into a coefficient, creating the mode when absent.
    pub fn add_to_mode(&mut self, n: Vec<i64>, value: CMat) -> Result<()> {
        self.check_mode(&n, &value)?;
        match self.coeffs.get_mut(&n) {
            Some(existing) => *existing += value,
            None => {
                self.coeffs.insert(n, value);
            }
        }
        Ok(())
    }

    fn check_mode(&self, n: &[i64], value: &CMat) -> Result<()> {
        if n.len() != self.d {
            return Err(FourierError::DimensionMismatch(format!(
                "mode index has {} components, torus dimension is {}",
                n.len(),
                self.d
            )));
        }
        if value.nrows() != self.m || value.ncols() != self.m {
            return Err(FourierError::DimensionMismatch(format!(
                "coefficient is {}x{}, map carries {}x{} matrices",
                value.nrows(),
                value.ncols(),
                self.m,
                self.m
            )));
        }
        let n_inf = linf_norm(n);
        if n_inf > self.radius {
            return Err(FourierError::RadiusExceeded {
                n_inf,
                radius: self.radius,
            });
        }
        if value.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(FourierError::NotFinite(format!(
                "coefficient at mode {n:?} contains a non-finite entry"
            )));
        }
        Ok(())
    }

    /// Value at a real point of the torus.
    pub fn evaluate(&self, x: &[f64]) -> CMat {
        assert_eq!(x.len(), self.d, "point dimension must match torus dimension");
        let mut acc = CMat::zeros(self.m, self.m);
        for (n, c) in &self.coeffs {
            let phase: f64 = n.iter().zip(x).map(|(&ni, &xi)| ni as f64 * xi).sum();
            let w = Complex64::from_polar(1.0, TAU * phase);
            acc.zip_apply(c, |a, b| *a += b * w);
        }
        acc
    }

    /// Value at a complex point x + i y of the strip. Errors when
    /// max_j |y_j| exceeds the declared strip width.
    pub fn evaluate_strip(&self, x: &[f64], y: &[f64]) -> Result<CMat> {
        assert_eq!(x.len(), self.d, "point dimension must match torus dimension");
        assert_eq!(y.len(), self.d, "point dimension must match torus dimension");
        let imag = y.iter().fold(0.0_f64, |acc, &v| acc.max(v.abs()));
        if imag > self.strip + 1e-15 {
            return Err(FourierError::StripExceeded {
                imag,
                strip: self.strip,
            });
        }
        let mut acc = CMat::zeros(self.m, self.m);
        for (n, c) in &self.coeffs {
            let re_phase: f64 = n.iter().zip(x).map(|(&ni, &xi)| ni as f64 * xi).sum();
            let decay: f64 = n.iter().zip(y).map(|(&ni, &yi)| ni as f64 * yi).sum();
            // e^{2 pi i <n, x + i y>} = e^{-2 pi <n, y>} e^{2 pi i <n, x>}
            let w = Complex64::from_polar((-TAU * decay).exp(), TAU * re_phase);
            acc.zip_apply(c, |a, b| *a += b * w);
        }
        Ok(acc)
    }

    /// Weighted coefficient norm sum_n |c(n)|_op e^{2 pi h |n|_1}.
    /// Requires 0 <= h <= strip.
    pub fn norm(&self, h: f64) -> Result<f64> {
        if !(0.0..=self.strip + 1e-15).contains(&h) {
            return Err(FourierError::InvalidParameter(format!(
                "norm weight h = {h} outside [0, strip = {}]",
                self.strip
            )));
        }
        Ok(self
            .coeffs
            .iter()
            .map(|(n, c)| op_norm(c) * (TAU * h * l1_norm(n) as f64).exp())
            .sum())
    }

    /// Unweighted coefficient norm (h = 0).
    pub fn norm0(&self) -> f64 {
        self.coeffs.values().map(op_norm).sum()
    }

    pub fn try_add(&self, rhs: &Self) -> Result<Self> {
        self.check_compatible(rhs)?;
        let mut out = Self {
            d: self.d,
            m: self.m,
            radius: self.radius.max(rhs.radius),
            strip: self.strip.min(rhs.strip),
            coeffs: self.coeffs.clone(),
        };
        for (n, c) in &rhs.coeffs {
            out.add_to_mode(n.clone(), c.clone())?;
        }
        Ok(out)
    }

    pub fn try_sub(&self, rhs: &Self) -> Result<Self> {
        self.try_add(&rhs.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let mut out = self.clone();
        for c in out.coeffs.values_mut() {
            *c *= factor;
        }
        out
    }

    /// Pointwise product, computed as coefficient convolution. The mode
    /// radius of the product is the sum of the operand radii.
    pub fn try_mul(&self, rhs: &Self) -> Result<Self> {
        self.check_compatible(rhs)?;
        let mut out = Self::zero(
            self.d,
            self.m,
            self.radius + rhs.radius,
            self.strip.min(rhs.strip),
        )?;
        for (p, a) in &self.coeffs {
            for (q, b) in &rhs.coeffs {
                let n: Vec<i64> = p.iter().zip(q).map(|(&pi, &qi)| pi + qi).collect();
                out.add_to_mode(n, a * b)?;
            }
        }
        Ok(out)
    }

    /// Composition with the translation x -> x + alpha:
    /// coefficients pick up the phase e^{2 pi i <n, alpha>}.
    pub fn shift(&self, alpha: &FrequencyVector) -> Result<Self> {
        if alpha.dim() != self.d {
            return Err(FourierError::DimensionMismatch(format!(
                "frequency has dimension {}, torus dimension is {}",
                alpha.dim(),
                self.d
            )));
        }
        let mut out = self.clone();
        for (n, c) in out.coeffs.iter_mut() {
            let w = Complex64::from_polar(1.0, TAU * alpha.dot(n));
            *c *= w;
        }
        Ok(out)
    }

    /// Left multiplication by a constant matrix.
    pub fn mul_const_left(&self, p: &CMat) -> Result<Self> {
        if p.ncols() != self.m || p.nrows() != self.m {
            return Err(FourierError::DimensionMismatch(format!(
                "constant factor is {}x{}, map carries {}x{} matrices",
                p.nrows(),
                p.ncols(),
                self.m,
                self.m
            )));
        }
        let mut out = self.clone();
        for c in out.coeffs.values_mut() {
            *c = p * &*c;
        }
        out.drop_zero_modes();
        Ok(out)
    }

    /// Right multiplication by a constant matrix.
    pub fn mul_const_right(&self, p: &CMat) -> Result<Self> {
        if p.ncols() != self.m || p.nrows() != self.m {
            return Err(FourierError::DimensionMismatch(format!(
                "constant factor is {}x{}, map carries {}x{} matrices",
                p.nrows(),
                p.ncols(),
                self.m,
                self.m
            )));
        }
        let mut out = self.clone();
        for c in out.coeffs.values_mut() {
            *c = &*c * p;
        }
        out.drop_zero_modes();
        Ok(out)
    }

    /// Conjugation x -> P f(x) P^{-1} by a constant matrix pair.
    pub fn conjugate_const(&self, p: &CMat, p_inv: &CMat) -> Result<Self> {
        self.mul_const_left(p)?.mul_const_right(p_inv)
    }

    /// Restrict to |n|_inf <= new_radius. Returns the truncated map together
    /// with the unweighted norm of the dropped tail.
    pub fn truncate(&self, new_radius: i64) -> (Self, f64) {
        let mut kept = BTreeMap::new();
        let mut tail = 0.0;
        for (n, c) in &self.coeffs {
            if linf_norm(n) <= new_radius {
                kept.insert(n.clone(), c.clone());
            } else {
                tail += op_norm(c);
            }
        }
        (
            Self {
                d: self.d,
                m: self.m,
                radius: new_radius.max(0),
                strip: self.strip,
                coeffs: kept,
            },
            tail,
        )
    }

    /// Weighted norm of the tail beyond the cutoff radius.
    pub fn tail_norm(&self, h: f64, cutoff: i64) -> Result<f64> {
        if !(0.0..=self.strip + 1e-15).contains(&h) {
            return Err(FourierError::InvalidParameter(format!(
                "norm weight h = {h} outside [0, strip = {}]",
                self.strip
            )));
        }
        Ok(self
            .coeffs
            .iter()
            .filter(|(n, _)| linf_norm(n) > cutoff)
            .map(|(n, c)| op_norm(c) * (TAU * h * l1_norm(n) as f64).exp())
            .sum())
    }

    /// Drop modes whose coefficient operator norm is at most tol.
    pub fn prune(&self, tol: f64) -> Self {
        let mut out = self.clone();
        out.coeffs.retain(|_, c| op_norm(c) > tol);
        out
    }

    /// Enlarge the declared mode radius without touching coefficients.
    pub fn with_radius(mut self, radius: i64) -> Result<Self> {
        for n in self.coeffs.keys() {
            if linf_norm(n) > radius {
                return Err(FourierError::RadiusExceeded {
                    n_inf: linf_norm(n),
                    radius,
                });
            }
        }
        self.radius = radius;
        Ok(self)
    }

    /// Replace the declared strip width (coefficients are unchanged; the
    /// weighted norm at large h grows accordingly).
    pub fn with_strip(mut self, strip: f64) -> Result<Self> {
        if !(strip >= 0.0) || !strip.is_finite() {
            return Err(FourierError::InvalidParameter(format!(
                "strip width must be finite and nonnegative, got {strip}"
            )));
        }
        self.strip = strip;
        Ok(self)
    }

    /// Largest deviation from the coefficient symmetry c(-n) = c(n)^H that
    /// characterizes pointwise Hermitian maps.
    pub fn hermitian_defect(&self) -> f64 {
        let mut defect = 0.0_f64;
        for (n, c) in &self.coeffs {
            let neg: Vec<i64> = n.iter().map(|&v| -v).collect();
            let mirror = self
                .coeffs
                .get(&neg)
                .cloned()
                .unwrap_or_else(|| CMat::zeros(self.m, self.m));
            defect = defect.max(op_norm(&(c.adjoint() - mirror)));
        }
        defect
    }

    /// Largest entrywise deviation from the coefficient symmetry
    /// c(-n) = conj(c(n)) that characterizes pointwise real maps.
    pub fn real_defect(&self) -> f64 {
        let mut defect = 0.0_f64;
        for (n, c) in &self.coeffs {
            let neg: Vec<i64> = n.iter().map(|&v| -v).collect();
            let mirror = self
                .coeffs
                .get(&neg)
                .cloned()
                .unwrap_or_else(|| CMat::zeros(self.m, self.m));
            for (a, b) in c.iter().zip(mirror.iter()) {
                defect = defect.max((a.conj() - b).norm());
            }
        }
        defect
    }

    fn check_compatible(&self, rhs: &Self) -> Result<()> {
        if self.d != rhs.d || self.m != rhs.m {
            return Err(FourierError::DimensionMismatch(format!(
                "maps have shapes (d = {}, m = {}) and (d = {}, m = {})",
                self.d, self.m, rhs.d, rhs.m
            )));
        }
        Ok(())
    }

    fn drop_zero_modes(&mut self) {
        self.coeffs.retain(|_, c| c.iter().any(|v| v.norm() > 0.0));
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryRepr {
    n: Vec<i64>,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapRepr {
    d: usize,
    m: usize,
    radius: i64,
    strip: f64,
    entries: Vec<EntryRepr>,
}

impl From<FourierMap> for MapRepr {
    fn from(map: FourierMap) -> Self {
        let m = map.m;
        let entries = map
            .coeffs
            .iter()
            .map(|(n, c)| EntryRepr {
                n: n.clone(),
                re: (0..m)
                    .map(|i| (0..m).map(|j| c[(i, j)].re).collect())
                    .collect(),
                im: (0..m)
                    .map(|i| (0..m).map(|j| c[(i, j)].im).collect())
                    .collect(),
            })
            .collect();
        MapRepr {
            d: map.d,
            m: map.m,
            radius: map.radius,
            strip: map.strip,
            entries,
        }
    }
}

impl TryFrom<MapRepr> for FourierMap {
    type Error = FourierError;

    fn try_from(repr: MapRepr) -> Result<Self> {
        let mut map = FourierMap::zero(repr.d, repr.m, repr.radius, repr.strip)?;
        for entry in repr.entries {
            if entry.re.len() != repr.m
                || entry.im.len() != repr.m
                || entry.re.iter().any(|row| row.len() != repr.m)
                || entry.im.iter().any(|row| row.len() != repr.m)
            {
                return Err(FourierError::DimensionMismatch(format!(
                    "entry at mode {:?} is not an {} x {} matrix",
                    entry.n, repr.m, repr.m
                )));
            }
            let mut c = CMat::zeros(repr.m, repr.m);
            for i in 0..repr.m {
                for j in 0..repr.m {
                    c[(i, j)] = Complex64::new(entry.re[i][j], entry.im[i][j]);
                }
            }
            if map.coeffs.contains_key(&entry.n) {
                return Err(FourierError::InvalidParameter(format!(
                    "duplicate mode {:?} in serialized map",
                    entry.n
                )));
            }
            map.set_mode(entry.n, c)?;
        }
        Ok(map)
    }
}
