//! Eigenvalues of general complex matrices through the Schur form.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;

/// Eigenvalues listed from the diagonal of the complex Schur factor.
pub fn spectrum(m: &CMat) -> Vec<Complex64> {
    assert_eq!(m.nrows(), m.ncols(), "spectrum needs a square matrix");
    let (_, t) = m.clone().schur().unpack();
    (0..t.nrows()).map(|i| t[(i, i)]).collect()
}
