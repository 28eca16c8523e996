//! Small dense helpers over `nalgebra`. Matrices are row-major `n x n` slices.

use nalgebra::{DMatrix, DVector};

pub(crate) fn matrix(n: usize, row_major: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(n, n, row_major)
}

/// `I - scale * P`.
pub(crate) fn identity_minus(n: usize, p: &[f64], scale: f64) -> DMatrix<f64> {
    let mut m = matrix(n, p) * (-scale);
    for i in 0..n {
        m[(i, i)] += 1.0;
    }
    m
}

/// Solves `a x = b` by LU with partial pivoting.
pub(crate) fn solve(a: DMatrix<f64>, b: &[f64]) -> Option<Vec<f64>> {
    let rhs = DVector::from_column_slice(b);
    let x = a.lu().solve(&rhs)?;
    x.iter()
        .all(|v| v.is_finite())
        .then(|| x.iter().copied().collect())
}

/// Number of singular values of `a` at or below `tol` (times the largest one).
pub(crate) fn null_space_dim(a: &DMatrix<f64>, tol: f64) -> usize {
    let sv = a.clone().singular_values();
    let scale = sv.iter().fold(1.0f64, |m, v| m.max(*v));
    sv.iter().filter(|v| **v <= tol * scale).count()
}

/// Row-major product `a * b` of two `n x n` matrices.
pub(crate) fn matmul(n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            let brow = &b[k * n..(k + 1) * n];
            let orow = &mut out[i * n..(i + 1) * n];
            for (o, bv) in orow.iter_mut().zip(brow) {
                *o += aik * bv;
            }
        }
    }
    out
}

/// `x^T P` for a row vector `x`.
pub(crate) fn vec_mat(n: usize, x: &[f64], p: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (i, xi) in x.iter().enumerate() {
        for (o, pv) in out.iter_mut().zip(&p[i * n..(i + 1) * n]) {
            *o += xi * pv;
        }
    }
    out
}

/// `P x` for a column vector `x`.
pub(crate) fn mat_vec(n: usize, p: &[f64], x: &[f64]) -> Vec<f64> {
    (0..n)
        .map(|i| {
            p[i * n..(i + 1) * n]
                .iter()
                .zip(x)
                .map(|(a, b)| a * b)
                .sum()
        })
        .collect()
}

pub(crate) fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}
