//! Dense linear-algebra helpers on column-major `nalgebra` matrices.
//!
//! Lower-triangular factors are always stored as full square matrices with a
//! zero upper triangle.

use nalgebra::{Cholesky, DMatrix};

use crate::{Error, Result};

/// Relative jitter ladder applied to the mean diagonal before giving up.
pub const JITTER_LADDER: [f64; 3] = [1e-8, 1e-6, 1e-4];

/// Cholesky factor of a symmetric matrix, escalating diagonal jitter on
/// failure. Returns the lower factor and the absolute jitter that was added.
pub fn cholesky_with_jitter(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "cholesky of a {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    if n == 0 {
        return Ok((DMatrix::zeros(0, 0), 0.0));
    }
    if let Some(chol) = Cholesky::new(a.clone()) {
        return Ok((chol.l(), 0.0));
    }
    let scale = jitter_scale(a);
    let mut jitter = 0.0;
    for rel in JITTER_LADDER {
        jitter = rel * scale;
        let mut shifted = a.clone();
        for i in 0..n {
            shifted[(i, i)] += jitter;
        }
        if let Some(chol) = Cholesky::new(shifted) {
            return Ok((chol.l(), jitter));
        }
    }
    Err(Error::NotPositiveDefinite { jitter })
}

fn jitter_scale(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mean = (0..n).map(|i| a[(i, i)].abs()).sum::<f64>() / n as f64;
    if mean > 0.0 && mean.is_finite() {
        mean
    } else {
        1.0
    }
}

/// Solves `L x = b` in place for lower-triangular `L`.
pub fn forward_solve_in_place(l: &DMatrix<f64>, b: &mut [f64]) {
    let n = b.len();
    debug_assert!(l.nrows() >= n);
    for j in 0..n {
        let col = l.column(j);
        let col = col.as_slice();
        let xj = b[j] / col[j];
        b[j] = xj;
        if xj != 0.0 {
            for i in (j + 1)..n {
                b[i] -= col[i] * xj;
            }
        }
    }
}

/// Solves `Lᵀ x = b` in place for lower-triangular `L`.
pub fn back_solve_transpose_in_place(l: &DMatrix<f64>, b: &mut [f64]) {
    let n = b.len();
    debug_assert!(l.nrows() >= n);
    for j in (0..n).rev() {
        let col = l.column(j);
        let col = col.as_slice();
        let mut acc = b[j];
        for i in (j + 1)..n {
            acc -= col[i] * b[i];
        }
        b[j] = acc / col[j];
    }
}

/// Inverse of a lower-triangular matrix (also lower triangular).
pub fn lower_triangular_inverse(l: &DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    let mut inv = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for k in 0..n {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[k] = 1.0;
        // Solve only the trailing block; the leading entries stay zero.
        for j in k..n {
            let xj = e[j] / l[(j, j)];
            e[j] = xj;
            if xj != 0.0 {
                for i in (j + 1)..n {
                    e[i] -= l[(i, j)] * xj;
                }
            }
        }
        for i in k..n {
            inv[(i, k)] = e[i];
        }
    }
    inv
}

/// Extends a lower-triangular root `L` of an `n×n` covariance by `k` new
/// points.
///
/// `cross_cov` is the `k×n` covariance between the new and the old points and
/// `new_cov` the `k×k` covariance among the new points. The returned
/// `(n+k)×(n+k)` factor keeps `L` as its leading block.
pub fn extend_root_lowrank(
    root: &DMatrix<f64>,
    cross_cov: &DMatrix<f64>,
    new_cov: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let n = root.nrows();
    let k = new_cov.nrows();
    if k == 0 {
        return Err(Error::InvalidInput("extension needs at least one point".into()));
    }
    if root.ncols() != n || cross_cov.nrows() != k || cross_cov.ncols() != n || new_cov.ncols() != k
    {
        return Err(Error::DimensionMismatch(format!(
            "root {}x{}, cross {}x{}, new {}x{}",
            root.nrows(),
            root.ncols(),
            cross_cov.nrows(),
            cross_cov.ncols(),
            new_cov.nrows(),
            new_cov.ncols()
        )));
    }
    // Off-diagonal block B solves L Bᵀ = crossᵀ.
    let mut b = DMatrix::zeros(k, n);
    let mut row = vec![0.0; n];
    for r in 0..k {
        for (j, v) in row.iter_mut().enumerate() {
            *v = cross_cov[(r, j)];
        }
        forward_solve_in_place(root, &mut row);
        for (j, v) in row.iter().enumerate() {
            b[(r, j)] = *v;
        }
    }
    let mut schur = new_cov - &b * b.transpose();
    // Symmetrize against rounding before factorizing.
    for i in 0..k {
        for j in 0..i {
            let v = 0.5 * (schur[(i, j)] + schur[(j, i)]);
            schur[(i, j)] = v;
            schur[(j, i)] = v;
        }
    }
    let (schur_root, _) = cholesky_with_jitter_scaled(&schur, new_cov)?;
    let mut out = DMatrix::zeros(n + k, n + k);
    out.view_mut((0, 0), (n, n)).copy_from(root);
    out.view_mut((n, 0), (k, n)).copy_from(&b);
    out.view_mut((n, n), (k, k)).copy_from(&schur_root);
    Ok(out)
}

/// Like [`cholesky_with_jitter`] but the jitter is relative to the diagonal of
/// `reference` (the Schur complement itself can be arbitrarily close to zero).
fn cholesky_with_jitter_scaled(
    a: &DMatrix<f64>,
    reference: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, f64)> {
    let n = a.nrows();
    if let Some(chol) = Cholesky::new(a.clone()) {
        return Ok((chol.l(), 0.0));
    }
    let scale = jitter_scale(reference);
    let mut jitter = 0.0;
    for rel in JITTER_LADDER {
        jitter = rel * scale;
        let mut shifted = a.clone();
        for i in 0..n {
            // Clamp tiny negative pivots produced by cancellation.
            if shifted[(i, i)] < 0.0 {
                shifted[(i, i)] = 0.0;
            }
            shifted[(i, i)] += jitter;
        }
        if let Some(chol) = Cholesky::new(shifted) {
            return Ok((chol.l(), jitter));
        }
    }
    Err(Error::NotPositiveDefinite { jitter })
}

/// `A Aᵀ` for a square factor.
pub fn reconstruct(root: &DMatrix<f64>) -> DMatrix<f64> {
    root * root.transpose()
}

/// Neumaier-compensated sum, independent of chunking.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}
