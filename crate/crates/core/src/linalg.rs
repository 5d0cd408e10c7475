//! Dense symmetric helpers shared by the harmonic and potential modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigenpairs of a symmetric matrix with eigenvalues sorted ascending.
pub fn sorted_eigen(m: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::Eigensolver("matrix has non-finite entries".into()));
    }
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::Eigensolver("symmetric QR iteration did not converge".into()))?;
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok((values, vectors))
}

pub fn smallest_eigenvalue(m: &DMatrix<f64>) -> Result<f64> {
    let (values, _) = sorted_eigen(m)?;
    Ok(values[0])
}

/// `f(M)` for symmetric `M` through its eigendecomposition.
pub fn symmetric_function(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> Result<DMatrix<f64>> {
    let (values, vectors) = sorted_eigen(m)?;
    let mut scaled = vectors.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= f(values[j]);
    }
    let mut out = scaled * vectors.transpose();
    crate::spectral::symmetrize(&mut out);
    Ok(out)
}

pub fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}
