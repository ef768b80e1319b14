//! Dense helpers over `faer` shared by the solvers.

use faer::prelude::SpSolver;
use faer::{Col, Mat, Side};

use crate::error::{Error, Result};

/// Relative diagonal jitter used when a Cholesky factorization fails.
pub const JITTER: f64 = 1e-10;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn col_to_vec(c: &Col<f64>) -> Vec<f64> {
    (0..c.nrows()).map(|i| c[i]).collect()
}

pub fn vec_to_col(v: &[f64]) -> Col<f64> {
    Col::from_fn(v.len(), |i| v[i])
}

/// `AᵀA`.
pub fn gram(a: &Mat<f64>) -> Mat<f64> {
    a.transpose() * a
}

/// `Aᵀv`.
pub fn mat_t_vec(a: &Mat<f64>, v: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.nrows(), v.len());
    let out = a.transpose() * vec_to_col(v);
    col_to_vec(&out)
}

/// `Av`.
pub fn mat_vec(a: &Mat<f64>, v: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.ncols(), v.len());
    let out = a * vec_to_col(v);
    col_to_vec(&out)
}

fn mean_abs_diag(m: &Mat<f64>) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 0.0;
    }
    (0..n).map(|i| m[(i, i)].abs()).sum::<f64>() / n as f64
}

/// Solves `M x = rhs` for symmetric positive definite `M` by Cholesky.
/// Fails if `M` is not numerically positive definite.
pub fn spd_solve(m: &Mat<f64>, rhs: &[f64]) -> Result<Vec<f64>> {
    let chol = m
        .cholesky(Side::Lower)
        .map_err(|_| Error::Singular("matrix is not positive definite".into()))?;
    let x = chol.solve(&vec_to_col(rhs));
    let x = col_to_vec(&x);
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(Error::Singular("non-finite Cholesky solution".into()))
    }
}

/// As [`spd_solve`], retrying once with a diagonal jitter of
/// `JITTER * mean|diag|` when the plain factorization fails.
/// Returns the solution and the jitter that was added (zero if none).
pub fn spd_solve_jittered(m: &Mat<f64>, rhs: &[f64]) -> Result<(Vec<f64>, f64)> {
    match spd_solve(m, rhs) {
        Ok(x) => Ok((x, 0.0)),
        Err(_) => {
            let jitter = JITTER * mean_abs_diag(m).max(1.0);
            let mut shifted = m.clone();
            for i in 0..shifted.nrows() {
                shifted[(i, i)] += jitter;
            }
            spd_solve(&shifted, rhs)
                .map(|x| (x, jitter))
                .map_err(|_| Error::Singular(format!("not positive definite even with jitter {jitter:e}")))
        }
    }
}

/// Lower Cholesky factor of an SPD matrix, with the same jitter fallback.
pub fn cholesky_lower_jittered(m: &Mat<f64>) -> Result<(Mat<f64>, f64)> {
    if let Ok(c) = m.cholesky(Side::Lower) {
        return Ok((c.compute_l(), 0.0));
    }
    let jitter = JITTER * mean_abs_diag(m).max(1.0);
    let mut shifted = m.clone();
    for i in 0..shifted.nrows() {
        shifted[(i, i)] += jitter;
    }
    shifted
        .cholesky(Side::Lower)
        .map(|c| (c.compute_l(), jitter))
        .map_err(|_| Error::Singular(format!("not positive definite even with jitter {jitter:e}")))
}

/// Solves `L x = b` in place for lower-triangular `L`.
pub fn forward_substitute(l: &Mat<f64>, b: &mut [f64]) {
    let n = l.nrows();
    for i in 0..n {
        let mut s = b[i];
        for j in 0..i {
            s -= l[(i, j)] * b[j];
        }
        b[i] = s / l[(i, i)];
    }
}

/// Solves `Lᵀ x = b` in place for lower-triangular `L`.
pub fn back_substitute_transpose(l: &Mat<f64>, b: &mut [f64]) {
    let n = l.nrows();
    for i in (0..n).rev() {
        let mut s = b[i];
        for j in i + 1..n {
            s -= l[(j, i)] * b[j];
        }
        b[i] = s / l[(i, i)];
    }
}

/// Symmetric eigendecomposition: eigenvalues ascending and the matching
/// orthonormal eigenvectors as columns.
pub fn symmetric_eigen(m: &Mat<f64>) -> (Vec<f64>, Mat<f64>) {
    let e = m.selfadjoint_eigendecomposition(Side::Lower);
    let s = e.s().column_vector();
    let values = (0..s.nrows()).map(|i| s[i]).collect();
    (values, e.u().to_owned())
}

/// Largest singular value.
pub fn spectral_norm(m: &Mat<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.singular_values().into_iter().fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spd_solve_recovers_solution() {
        let m = Mat::from_fn(3, 3, |i, j| if i == j { 4.0 } else { 1.0 });
        let x = vec![1.0, -2.0, 0.5];
        let rhs = mat_vec(&m, &x);
        let got = spd_solve(&m, &rhs).unwrap();
        for (a, b) in got.iter().zip(&x) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_matrix_rejected_then_jittered() {
        let m = Mat::from_fn(2, 2, |_, _| 1.0);
        assert!(spd_solve(&m, &[1.0, 1.0]).is_err());
        let (x, jitter) = spd_solve_jittered(&m, &[1.0, 1.0]).unwrap();
        assert!(jitter > 0.0);
        assert!(x.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn triangular_solves_invert_factor() {
        let m = Mat::from_fn(3, 3, |i, j| if i == j { 3.0 } else { 0.5 });
        let (l, _) = cholesky_lower_jittered(&m).unwrap();
        let b = vec![1.0, 2.0, 3.0];
        let mut x = b.clone();
        forward_substitute(&l, &mut x);
        back_substitute_transpose(&l, &mut x);
        let expect = spd_solve(&m, &b).unwrap();
        for (a, e) in x.iter().zip(&expect) {
            assert!((a - e).abs() < 1e-12);
        }
    }

    #[test]
    fn spectral_norm_of_scaled_identity() {
        let m = Mat::from_fn(4, 4, |i, j| if i == j { -2.5 } else { 0.0 });
        assert!((spectral_norm(&m) - 2.5).abs() < 1e-12);
    }
}
