use nalgebra::{DMatrix, SymmetricEigen};

use crate::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-6;

fn eigen(matrix: &DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    if !matrix.is_square() {
        return Err(Error::Dimension {
            expected: matrix.nrows(),
            actual: matrix.ncols(),
        });
    }
    let scale = matrix.amax();
    let asym = (matrix - matrix.transpose()).amax();
    if asym > SYMMETRY_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::Numerical(format!(
            "matrix is not symmetric (max asymmetry {asym:e})"
        )));
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("matrix has non-finite entries".into()));
    }
    let sym = (matrix + matrix.transpose()) * 0.5;
    Ok(SymmetricEigen::new(sym))
}

fn rebuild(eig: &SymmetricEigen<f64, nalgebra::Dyn>, inverted: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let v = &eig.eigenvectors;
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(inverted));
    v * d * v.transpose()
}

/// Moore-Penrose pseudo-inverse of a symmetric matrix.
///
/// Eigenvalues with `|e| < rel_tol * max|e|` are treated as zero.
pub fn pinv_symmetric(matrix: &DMatrix<f64>, rel_tol: f64) -> Result<DMatrix<f64>> {
    let eig = eigen(matrix)?;
    let cutoff = rel_tol * eig.eigenvalues.amax();
    Ok(rebuild(&eig, |e| if e.abs() < cutoff || e == 0.0 { 0.0 } else { 1.0 / e }))
}

/// Pseudo-inverse after projecting onto the positive semidefinite cone.
///
/// Negative eigenvalues are dropped together with the ones below
/// `rel_tol * max|e|`. Also returns the ratio of the largest to the smallest
/// retained eigenvalue (infinite when nothing is retained).
pub fn pinv_psd(matrix: &DMatrix<f64>, rel_tol: f64) -> Result<(DMatrix<f64>, f64)> {
    let eig = eigen(matrix)?;
    let cutoff = rel_tol * eig.eigenvalues.amax();
    let keep = |e: f64| e > 0.0 && e >= cutoff;
    let kept: Vec<f64> = eig.eigenvalues.iter().copied().filter(|&e| keep(e)).collect();
    let condition = match (
        kept.iter().copied().reduce(f64::max),
        kept.iter().copied().reduce(f64::min),
    ) {
        (Some(hi), Some(lo)) => hi / lo,
        _ => f64::INFINITY,
    };
    Ok((rebuild(&eig, |e| if keep(e) { 1.0 / e } else { 0.0 }), condition))
}
