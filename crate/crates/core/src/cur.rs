//! Classic CUR decomposition with uniformly sampled columns and rows.
//!
//! The linking matrix is `U = C^+ M R^+`, computed from the full matrix.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{ensure_finite, pseudo_inverse, svd, DenseMatrix, PINV_DEFAULT_TOL};
use crate::sampling::{sample_columns, sample_rows, IndexSet, RngStream};

/// Relative Frobenius error below which a reconstruction counts as exact.
pub const EXACT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct CurFactors {
    /// `n x c` sampled columns, in increasing column order.
    pub c: DenseMatrix,
    /// `c x r_rows` linking matrix.
    pub u_core: DenseMatrix,
    /// `r_rows x m` sampled rows, in increasing row order.
    pub r: DenseMatrix,
    pub col_idx: IndexSet,
    pub row_idx: IndexSet,
}

impl CurFactors {
    pub fn reconstruct(&self) -> DenseMatrix {
        &self.c * &self.u_core * &self.r
    }

    pub fn num_cols(&self) -> usize {
        self.c.ncols()
    }

    pub fn num_rows(&self) -> usize {
        self.r.nrows()
    }
}

/// Samples `c` columns and `r_rows` rows of `m` without replacement.
pub fn cur_decompose(
    m: &DenseMatrix,
    c: usize,
    r_rows: usize,
    rng: &RngStream,
) -> Result<CurFactors> {
    ensure_finite(m, "matrix")?;
    let cols = sample_columns(m, c, &rng.child(0))?;
    let rows = sample_rows(m, r_rows, &rng.child(1))?;
    let c_mat = m.select_columns(cols.set.indices().iter());
    let r_mat = m.select_rows(rows.set.indices().iter());
    let u_core =
        pseudo_inverse(&c_mat, PINV_DEFAULT_TOL)? * m * pseudo_inverse(&r_mat, PINV_DEFAULT_TOL)?;
    Ok(CurFactors {
        c: c_mat,
        u_core,
        r: r_mat,
        col_idx: cols.set,
        row_idx: rows.set,
    })
}

/// `||M - CUR||_F / ||M - M_k||_F`, with the degenerate cases flagged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurRatio {
    Ratio(f64),
    /// CUR reproduces `M` to within [`EXACT_TOL`].
    Exact,
    /// `M` has rank at most `k` but CUR does not reproduce it.
    Infinite,
}

impl CurRatio {
    pub fn value(&self) -> f64 {
        match self {
            CurRatio::Ratio(x) => *x,
            CurRatio::Exact => 0.0,
            CurRatio::Infinite => f64::INFINITY,
        }
    }
}

pub fn cur_error_ratio(m: &DenseMatrix, factors: &CurFactors, k: usize) -> Result<CurRatio> {
    let (n, cols) = m.shape();
    if k == 0 || k > n.min(cols) {
        return Err(Error::invalid(format!(
            "rank {k} is outside 1..={} for a {n}x{cols} matrix",
            n.min(cols)
        )));
    }
    let scale = m.norm();
    let num = (m - factors.reconstruct()).norm();
    if num <= EXACT_TOL * scale {
        return Ok(CurRatio::Exact);
    }
    let f = svd(m)?;
    let tail: f64 = f.sigma.iter().skip(k).map(|s| s * s).sum::<f64>().sqrt();
    if tail <= EXACT_TOL * scale {
        return Ok(CurRatio::Infinite);
    }
    Ok(CurRatio::Ratio(num / tail))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurReport {
    pub c: usize,
    pub r_rows: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub infinite: Option<bool>,
}

impl CurReport {
    pub fn new(factors: &CurFactors, ratio: CurRatio) -> Self {
        let (error_ratio, exact, infinite) = match ratio {
            CurRatio::Ratio(x) => (Some(x), None, None),
            CurRatio::Exact => (None, Some(true), None),
            CurRatio::Infinite => (None, None, Some(true)),
        };
        CurReport {
            c: factors.num_cols(),
            r_rows: factors.num_rows(),
            error_ratio,
            exact,
            infinite,
        }
    }
}
