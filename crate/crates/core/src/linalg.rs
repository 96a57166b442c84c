//! Dense Hermitian eigensolver wrappers around nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: DMatrix<Complex64>) -> Vec<f64> {
    let mut v: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Full eigendecomposition with eigenvalues ascending; column `k` of the
/// returned matrix is the eigenvector of `values[k]`.
pub fn hermitian_eigh(m: DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |i, k| {
        eig.eigenvectors[(i, order[k])]
    });
    (values, vectors)
}

/// Eigenvalues of a real symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Lowest eigenpair of a real symmetric matrix.
pub fn symmetric_ground(m: DMatrix<f64>) -> (f64, DVector<f64>) {
    let eig = m.symmetric_eigen();
    let k = eig.eigenvalues.argmin().0;
    (eig.eigenvalues[k], eig.eigenvectors.column(k).into_owned())
}

/// Lowest eigenpair of a Hermitian matrix.
pub fn hermitian_ground(m: DMatrix<Complex64>) -> (f64, DVector<Complex64>) {
    let eig = m.symmetric_eigen();
    let k = eig.eigenvalues.argmin().0;
    (eig.eigenvalues[k], eig.eigenvectors.column(k).into_owned())
}
