//! Small dense helpers shared by the verification code.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub fn complexify(m: &DMatrix<f64>) -> CMat {
    m.map(Complex64::from)
}

/// Largest singular value, from the eigenvalues of the Gram matrix `A^H A`.
pub fn op_norm(a: &CMat) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let gram = if a.nrows() >= a.ncols() {
        a.adjoint() * a
    } else {
        a * a.adjoint()
    };
    let eig = SymmetricEigen::new(gram);
    eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max).max(0.0).sqrt()
}

pub fn op_norm_real(a: &DMatrix<f64>) -> f64 {
    op_norm(&complexify(a))
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(a: &CMat) -> f64 {
    SymmetricEigen::new(a.clone())
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Orthonormal basis (columns) of the span of `cols` in the inner product
/// `<x, y> = x^T W y` with symmetric positive definite `W`. Columns whose
/// residual after projection falls below `drop` relative to their norm are
/// discarded.
pub fn orthonormalize(cols: &DMatrix<f64>, w: &DMatrix<f64>, drop: f64) -> DMatrix<f64> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for j in 0..cols.ncols() {
        let mut v = cols.column(j).into_owned();
        let norm0 = (v.transpose() * w * &v)[0].sqrt();
        for _ in 0..2 {
            for q in &basis {
                let c = (q.transpose() * w * &v)[0];
                v -= q * c;
            }
        }
        let norm = (v.transpose() * w * &v)[0].sqrt();
        if norm > drop * norm0.max(f64::MIN_POSITIVE) {
            basis.push(v / norm);
        }
    }
    if basis.is_empty() {
        DMatrix::zeros(cols.nrows(), 0)
    } else {
        DMatrix::from_columns(&basis)
    }
}

/// Sines of the principal angles between two subspaces given by
/// `W`-orthonormal bases, largest first.
pub fn principal_sines(a: &DMatrix<f64>, b: &DMatrix<f64>, w: &DMatrix<f64>) -> Vec<f64> {
    let cross = a.transpose() * w * b;
    let svd = cross.svd(false, false);
    let mut cosines: Vec<f64> = svd.singular_values.iter().map(|s| s.min(1.0)).collect();
    cosines.sort_by(|x, y| x.total_cmp(y));
    let dim = a.ncols().max(b.ncols());
    let mut sines: Vec<f64> = cosines.iter().map(|c| (1.0 - c * c).max(0.0).sqrt()).collect();
    // a dimension mismatch leaves directions with no partner at all
    sines.extend(std::iter::repeat_n(1.0, dim - cosines.len()));
    sines.sort_by(|x, y| y.total_cmp(x));
    sines
}
