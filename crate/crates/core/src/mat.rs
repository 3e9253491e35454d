//! Dense complex-matrix helpers shared across the crate.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Dense complex matrix used for all operators.
pub type CMat = DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVec = DVector<Complex64>;

/// `re + i*im` shorthand.
#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Real scalar promoted to a complex one.
#[inline]
pub fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Largest entry magnitude, 0 for empty matrices.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// True when every entry is finite (no NaN / infinity in either part).
pub fn all_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Max-entry deviation from Hermiticity, `max |m - m†|`.
pub fn hermiticity_defect(m: &CMat) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// True when `m` is Hermitian up to `tol` in max-entry norm.
pub fn is_hermitian(m: &CMat, tol: f64) -> bool {
    m.is_square() && hermiticity_defect(m) <= tol
}

/// Hermitian part `(m + m†)/2`.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Frobenius inner product `tr(a† b)`.
pub fn frobenius_inner(a: &CMat, b: &CMat) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Frobenius norm.
pub fn frobenius_norm(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigenvalues of a Hermitian matrix, ascending.
///
/// The input is symmetrised first so tiny anti-Hermitian roundoff cannot
/// leak imaginary parts into the spectrum.
pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    let h = hermitian_part(m);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &CMat) -> f64 {
    hermitian_eigenvalues(m)
        .first()
        .copied()
        .unwrap_or(f64::NAN)
}

/// Column-stacks `blocks` vertically; all blocks must share a column count.
pub fn vstack(blocks: &[CMat]) -> CMat {
    assert!(!blocks.is_empty(), "vstack of no blocks");
    let ncols = blocks[0].ncols();
    let nrows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMat::zeros(nrows, ncols);
    let mut row = 0;
    for b in blocks {
        assert_eq!(b.ncols(), ncols, "vstack column mismatch");
        out.view_mut((row, 0), (b.nrows(), ncols)).copy_from(b);
        row += b.nrows();
    }
    out
}

/// Flattens `m` row-major into a complex vector.
pub fn vec_row_major(m: &CMat) -> CVec {
    let (r, c) = m.shape();
    CVec::from_fn(r * c, |i, _| m[(i / c, i % c)])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sigma_y() -> CMat {
        CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
    }

    #[test]
    fn hermitian_eigenvalues_of_pauli_y() {
        let ev = hermitian_eigenvalues(&sigma_y());
        assert!((ev[0] + 1.0).abs() < 1e-12);
        assert!((ev[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hermiticity_checks() {
        assert!(is_hermitian(&sigma_y(), 1e-14));
        let m = CMat::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(0.0), cr(0.0)]);
        assert!(!is_hermitian(&m, 1e-14));
        assert!((hermiticity_defect(&m) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn frobenius_inner_matches_trace() {
        let a = sigma_y();
        let b = CMat::from_row_slice(2, 2, &[cr(1.0), c(2.0, 1.0), c(0.5, -3.0), cr(4.0)]);
        let direct = (a.adjoint() * &b).trace();
        let fast = frobenius_inner(&a, &b);
        assert!((direct - fast).norm() < 1e-12);
    }

    #[test]
    fn vstack_shapes_and_content() {
        let a = CMat::identity(2, 2);
        let b = sigma_y();
        let s = vstack(&[a.clone(), b.clone()]);
        assert_eq!(s.shape(), (4, 2));
        assert_eq!(s[(0, 0)], cr(1.0));
        assert_eq!(s[(2, 1)], c(0.0, -1.0));
    }
}
