//! Dense SVD helpers backed by faer, returning nalgebra types.

use faer::Mat;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Full SVD `m = U diag(s) V^T` with `s` sorted in nonincreasing order.
/// `u` is `rows x rows`, `v` is `cols x cols`; `s` has `min(rows, cols)`
/// entries.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub s: DVector<f64>,
    pub v: DMatrix<f64>,
}

fn to_faer(m: &DMatrix<f64>) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

pub fn svd(m: &DMatrix<f64>) -> Result<Svd> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Ok(Svd {
            u: DMatrix::identity(rows, rows),
            s: DVector::zeros(0),
            v: DMatrix::identity(cols, cols),
        });
    }
    let dec = to_faer(m)
        .svd()
        .map_err(|e| Error::Precondition(format!("svd did not converge: {e:?}")))?;
    let (u, v) = (dec.U(), dec.V());
    let s = dec.S().column_vector();
    Ok(Svd {
        u: DMatrix::from_fn(rows, rows, |i, j| u[(i, j)]),
        s: DVector::from_fn(rows.min(cols), |i, _| s[i]),
        v: DMatrix::from_fn(cols, cols, |i, j| v[(i, j)]),
    })
}

pub fn singular_values(m: &DMatrix<f64>) -> Result<DVector<f64>> {
    if m.is_empty() {
        return Ok(DVector::zeros(0));
    }
    let s = to_faer(m)
        .singular_values()
        .map_err(|e| Error::Precondition(format!("svd did not converge: {e:?}")))?;
    Ok(DVector::from_vec(s))
}

/// Spectral norm; zero for empty matrices.
pub fn two_norm(m: &DMatrix<f64>) -> f64 {
    singular_values(m)
        .ok()
        .and_then(|s| s.iter().copied().reduce(f64::max))
        .unwrap_or(0.0)
}
