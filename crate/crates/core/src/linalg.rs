//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

pub const SPECTRAL_TOL: f64 = 1e-10;
pub const SPECTRAL_MAX_ITER: usize = 10_000;

/// Largest singular value of `l` by power iteration on `LᵀL`.
///
/// Stops when two successive Rayleigh estimates agree to `SPECTRAL_TOL`
/// relative error or after `SPECTRAL_MAX_ITER` iterations.
pub fn spectral_norm(l: &Matrix) -> f64 {
    let n = l.ncols();
    if n == 0 || l.iter().all(|v| *v == 0.0) {
        return 0.0;
    }
    let gram = l.transpose() * l;
    // Start from the heaviest column of the Gram matrix, nudged off any
    // exact invariant subspace.
    let mut best = 0;
    let mut best_norm = -1.0;
    for j in 0..n {
        let c = gram.column(j).norm();
        if c > best_norm {
            best_norm = c;
            best = j;
        }
    }
    let mut v = gram.column(best).into_owned();
    for (i, x) in v.iter_mut().enumerate() {
        *x += 1e-3 / (i as f64 + 2.0);
    }
    let nv = v.norm();
    if nv == 0.0 {
        return 0.0;
    }
    v /= nv;
    let mut lambda = 0.0;
    for _ in 0..SPECTRAL_MAX_ITER {
        let next = &gram * &v;
        let nl = next.norm();
        if nl == 0.0 {
            return 0.0;
        }
        let converged = (nl - lambda).abs() <= SPECTRAL_TOL * nl;
        lambda = nl;
        v = next / nl;
        if converged {
            break;
        }
    }
    lambda.sqrt()
}

/// Spectral norm with a small relative safety margin, for use as a
/// certified contraction rate.
pub fn spectral_norm_upper(l: &Matrix) -> f64 {
    let s = spectral_norm(l);
    let frob = l.norm();
    (s * (1.0 + 1e-9) + 1e-15).min(frob.max(s))
}

pub fn identity(d: usize) -> Matrix {
    Matrix::identity(d, d)
}

pub fn solve(a: &Matrix, b: &Vector) -> Result<Vector> {
    a.clone()
        .lu()
        .solve(b)
        .filter(|x| x.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::Singular(format!("{}x{} system", a.nrows(), a.ncols())))
}

pub fn matrix_power(l: &Matrix, n: usize) -> Matrix {
    let mut out = identity(l.nrows());
    for _ in 0..n {
        out = &out * l;
    }
    out
}

pub fn all_finite<'a>(values: impl IntoIterator<Item = &'a f64>) -> bool {
    values.into_iter().all(|v| v.is_finite())
}

pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    let m = rows[0].len();
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::InvalidArgument("ragged matrix rows".into()));
    }
    Ok(Matrix::from_fn(n, m, |i, j| rows[i][j]))
}

pub fn matrix_to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_norm() {
        let l = Matrix::from_diagonal(&Vector::from_vec(vec![0.5, 0.3]));
        assert!((spectral_norm(&l) - 0.5).abs() < 1e-10);
    }

    #[test]
    fn scaled_rotation_norm() {
        let (s, c) = (30f64.to_radians().sin(), 30f64.to_radians().cos());
        let l = Matrix::from_row_slice(2, 2, &[c, -s, s, c]) * 0.9;
        assert!((spectral_norm(&l) - 0.9).abs() < 1e-10);
    }

    #[test]
    fn nilpotent_and_zero() {
        let l = Matrix::from_row_slice(2, 2, &[0.0, 0.5, 0.0, 0.0]);
        assert!((spectral_norm(&l) - 0.5).abs() < 1e-10);
        assert_eq!(spectral_norm(&Matrix::zeros(3, 3)), 0.0);
    }

    #[test]
    fn matches_svd_on_dense_matrix() {
        let l = Matrix::from_row_slice(3, 3, &[0.3, -0.2, 0.1, 0.05, 0.4, -0.3, 0.2, 0.1, 0.25]);
        let svd = l.clone().svd(false, false);
        let top = svd.singular_values.max();
        assert!((spectral_norm(&l) - top).abs() < 1e-8 * top);
        assert!(spectral_norm_upper(&l) >= spectral_norm(&l));
    }
}
