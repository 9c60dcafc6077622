//! Small dense helpers on top of nalgebra.

use nalgebra::linalg::balancing::balance_parlett_reinsch;
use nalgebra::{DMatrix, Schur, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

const SCHUR_MAX_ITER: usize = 10_000;

/// Eigenvalues of a general real matrix (balanced Francis QR).
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::EigenFailure(n));
    }
    let mut work = m.clone();
    balance_parlett_reinsch(&mut work);
    // repeated eigenvalues can stall deflation at machine precision; relax before giving up
    for eps in [f64::EPSILON, 1e-14, 1e-12] {
        if let Some(schur) = Schur::try_new(work.clone(), eps, SCHUR_MAX_ITER) {
            return Ok(schur.complex_eigenvalues().iter().copied().collect());
        }
    }
    // Francis shifts can also cycle; an orthogonal similarity moves the iteration off the cycle
    for k in 1..=3 {
        let q = householder(n, k);
        let rotated = &q * &work * &q;
        if let Some(schur) = Schur::try_new(rotated, 1e-14, SCHUR_MAX_ITER) {
            return Ok(schur.complex_eigenvalues().iter().copied().collect());
        }
    }
    Err(Error::EigenFailure(n))
}

/// Reflection `I - 2 v v^T / |v|^2` with a fixed, dense `v`.
fn householder(n: usize, k: usize) -> DMatrix<f64> {
    let v = DMatrix::from_fn(n, 1, |i, _| ((i + 1) as f64 * (k as f64 + 0.618)).sin() + 1.5);
    let scale = 2.0 / v.norm_squared();
    DMatrix::identity(n, n) - &v * v.transpose() * scale
}

/// Largest real part among the eigenvalues, with the eigenvalue attaining it.
pub fn spectral_abscissa(m: &DMatrix<f64>) -> Result<Option<Complex64>> {
    Ok(rightmost(eigenvalues(m)?))
}

/// Eigenvalue with the largest real part, preferring the smaller `|im|` on ties.
pub fn rightmost(eig: Vec<Complex64>) -> Option<Complex64> {
    eig.into_iter()
        .max_by(|a, b| a.re.total_cmp(&b.re).then(b.im.abs().total_cmp(&a.im.abs())))
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn symmetric_eigen(m: &DMatrix<f64>) -> SymmetricEigen<f64, nalgebra::Dyn> {
    SymmetricEigen::new(m.clone())
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Block matrix `[[a, b], [c, d]]`.
pub fn block2(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, d: &DMatrix<f64>) -> DMatrix<f64> {
    let (r1, c1) = (a.nrows(), a.ncols());
    let (r2, c2) = (d.nrows(), d.ncols());
    let mut out = DMatrix::zeros(r1 + r2, c1 + c2);
    out.view_mut((0, 0), (r1, c1)).copy_from(a);
    out.view_mut((0, c1), (r1, c2)).copy_from(b);
    out.view_mut((r1, 0), (r2, c1)).copy_from(c);
    out.view_mut((r1, c1), (r2, c2)).copy_from(d);
    out
}
