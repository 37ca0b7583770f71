//! Small dense-matrix helpers shared across the crate.
//!
//! Everything operates on `DMatrix<Complex64>`. Inner products are
//! conjugate-linear in the first slot throughout the crate: `⟨u, v⟩ = u* v`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Hermitian part `(m + m*)/2`.
pub fn hermitian_part(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Frobenius norm of `m - m*`.
pub fn asymmetry(m: &DMatrix<Complex64>) -> f64 {
    (m - m.adjoint()).norm()
}

/// Largest singular value; zero for an empty matrix.
pub fn spectral_norm(m: &DMatrix<Complex64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// Orthonormal basis of the column span, dropping singular directions below
/// `threshold` (an absolute cutoff on singular values).
pub fn orthonormal_range(m: &DMatrix<Complex64>, threshold: f64) -> DMatrix<Complex64> {
    let rows = m.nrows();
    if rows == 0 || m.ncols() == 0 {
        return DMatrix::zeros(rows, 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("svd with u requested");
    let kept: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s > threshold)
        .map(|(i, _)| i)
        .collect();
    let mut out = DMatrix::zeros(rows, kept.len());
    for (dst, src) in kept.iter().enumerate() {
        out.set_column(dst, &u.column(*src));
    }
    out
}

/// Orthonormal basis of the null space of `m`, honoring an absolute singular
/// value cutoff. Works for wide matrices, where the thin SVD alone does not
/// expose the full kernel: the kernel is recovered as the range of
/// `I - V_kept V_kept*`.
pub fn kernel_basis(m: &DMatrix<Complex64>, threshold: f64) -> DMatrix<Complex64> {
    let cols = m.ncols();
    if cols == 0 {
        return DMatrix::zeros(0, 0);
    }
    if m.nrows() == 0 {
        return DMatrix::identity(cols, cols);
    }
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("svd with v_t requested");
    let mut projector = DMatrix::<Complex64>::identity(cols, cols);
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s > threshold {
            let row = v_t.row(i);
            // projector -= v v* with v = row*
            let v = row.adjoint();
            projector -= &v * v.adjoint();
        }
    }
    // Kernel directions have projector-singular-value 1, kept ones 0.
    orthonormal_range(&projector, 0.5)
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted
/// ascending. Returns `(eigenvalues, eigenvectors)` with matching columns.
pub fn hermitian_eigen_sorted(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .partial_cmp(&eig.eigenvalues[j])
            .expect("finite eigenvalues")
    });
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Solve `m x = rhs` for a square matrix, rejecting solves whose smallest
/// singular value falls below `threshold` (an absolute cutoff).
pub fn solve_checked(
    m: &DMatrix<Complex64>,
    rhs: &DVector<Complex64>,
    threshold: f64,
) -> Option<DVector<Complex64>> {
    let svd = m.clone().svd(true, true);
    let smin = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
    if !smin.is_finite() || smin <= threshold {
        return None;
    }
    svd.solve(rhs, 0.0).ok()
}

/// Columns of `m` as owned vectors.
pub fn columns(m: &DMatrix<Complex64>) -> Vec<DVector<Complex64>> {
    (0..m.ncols()).map(|j| m.column(j).into_owned()).collect()
}

pub fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}
