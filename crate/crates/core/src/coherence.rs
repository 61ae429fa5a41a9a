//! Incoherence of singular bases, the regularized numerical rank and its
//! incoherence, and sin-theta distances between subspaces.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    check_orthonormal, partition_svd, spectral_norm, svd, DenseMatrix, SvdFactors,
};

/// Largest scaled row leverage of one or two orthonormal factors.
///
/// `arg_row` indexes the left factor, `arg_col` the right one (absent when a
/// single basis was scanned).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoherenceReport {
    pub mu: f64,
    pub arg_row: usize,
    pub arg_col: Option<usize>,
    #[serde(rename = "r")]
    pub r_used: usize,
}

/// `(max_i (N/r) |row_i|^2, argmax)` without validating orthonormality.
fn leverage_scan(q: &DenseMatrix) -> (f64, usize) {
    let (rows, r) = q.shape();
    let scale = rows as f64 / r as f64;
    let mut best = (f64::NEG_INFINITY, 0);
    for i in 0..rows {
        let v = scale * q.row(i).norm_squared();
        if v > best.0 {
            best = (v, i);
        }
    }
    best
}

pub fn basis_incoherence(q: &DenseMatrix) -> Result<CoherenceReport> {
    check_orthonormal(q, "incoherence basis")?;
    let (mu, arg_row) = leverage_scan(q);
    debug_assert!(mu >= 1.0 - 1e-9);
    Ok(CoherenceReport {
        mu,
        arg_row,
        arg_col: None,
        r_used: q.ncols(),
    })
}

fn pair_incoherence(left: &DenseMatrix, right: &DenseMatrix) -> Result<CoherenceReport> {
    check_orthonormal(left, "left basis")?;
    check_orthonormal(right, "right basis")?;
    if left.ncols() != right.ncols() {
        return Err(Error::invalid("left and right bases have different ranks"));
    }
    let (mu_u, arg_row) = leverage_scan(left);
    let (mu_v, arg_col) = leverage_scan(right);
    Ok(CoherenceReport {
        mu: mu_u.max(mu_v),
        arg_row,
        arg_col: Some(arg_col),
        r_used: left.ncols(),
    })
}

/// `mu(r)` from precomputed singular factors.
pub fn mu_r_from_svd(f: &SvdFactors, r: usize) -> Result<CoherenceReport> {
    let part = partition_svd(f, r)?;
    pair_incoherence(&part.u1, &part.v1)
}

/// `mu(r)`: incoherence of the top-`r` left and right singular vectors of `m`.
pub fn mu_r(m: &DenseMatrix, r: usize) -> Result<CoherenceReport> {
    mu_r_from_svd(&svd(m)?, r)
}

/// Incoherence of estimated bases `U_hat` (n x r) and `V_hat` (m x r).
pub fn mu_hat(u_hat: &DenseMatrix, v_hat: &DenseMatrix) -> Result<CoherenceReport> {
    pair_incoherence(u_hat, v_hat)
}

/// Regularized numerical rank `r(M, lambda)` with the incoherence `mu(lambda)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NumericalRankReport {
    pub lambda: f64,
    #[serde(rename = "numerical_rank")]
    pub value: f64,
    pub mu_lambda: f64,
    /// Diagonal of `S = Sigma^2 + mn * lambda * I`.
    #[serde(skip)]
    pub s_diag: Vec<f64>,
}

/// Per-direction weights `sigma_k^2 / (sigma_k^2 + mn lambda)`; singular
/// values at the numerical zero level get weight zero, which is the
/// `lambda -> 0+` limit.
fn direction_weights(f: &SvdFactors, lambda: f64) -> Vec<f64> {
    let shift = (f.rows() * f.cols()) as f64 * lambda;
    let zero = f.zero_threshold();
    f.sigma
        .iter()
        .map(|&s| {
            if s <= zero {
                0.0
            } else {
                s * s / (s * s + shift)
            }
        })
        .collect()
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!(
            "lambda must be finite and >= 0, got {lambda}"
        )));
    }
    Ok(())
}

pub fn numerical_rank_from_svd(f: &SvdFactors, lambda: f64) -> Result<NumericalRankReport> {
    check_lambda(lambda)?;
    let weights = direction_weights(f, lambda);
    let value: f64 = weights.iter().sum();
    if value <= 0.0 {
        return Err(Error::invalid(
            "numerical rank of a zero matrix is undefined",
        ));
    }
    let shift = (f.rows() * f.cols()) as f64 * lambda;
    let s_diag = f.sigma.iter().map(|s| s * s + shift).collect();

    let weighted_scan = |q: &DenseMatrix, dim: usize| {
        (0..q.nrows())
            .map(|i| {
                let row: f64 = q.row(i).iter().zip(&weights).map(|(x, w)| x * x * w).sum();
                dim as f64 / value * row
            })
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let mu_lambda = weighted_scan(&f.u, f.rows()).max(weighted_scan(&f.v, f.cols()));
    debug_assert!(mu_lambda >= 1.0 - 1e-9);
    Ok(NumericalRankReport {
        lambda,
        value,
        mu_lambda,
        s_diag,
    })
}

/// `r(M, lambda) = sum_i sigma_i^2 / (sigma_i^2 + mn lambda)`, with `mu(lambda)`.
pub fn numerical_rank(m: &DenseMatrix, lambda: f64) -> Result<NumericalRankReport> {
    numerical_rank_from_svd(&svd(m)?, lambda)
}

/// `mu(lambda)`: the largest row norm of `U Sigma S^{-1/2}` scaled by
/// `n / r(M, lambda)`, or of `V Sigma S^{-1/2}` scaled by `m / r(M, lambda)`.
///
/// Left rows pair with `n` and right rows with `m`, matching `mu(r)`.
pub fn mu_lambda(m: &DenseMatrix, lambda: f64) -> Result<f64> {
    Ok(numerical_rank(m, lambda)?.mu_lambda)
}

/// Largest principal-angle sine between the spans of two orthonormal bases,
/// `||(I - Q2 Q2^T) Q1||_2`, evaluated without forming the projector.
pub fn sin_theta(q1: &DenseMatrix, q2: &DenseMatrix) -> Result<f64> {
    if q1.shape() != q2.shape() {
        return Err(Error::invalid(format!(
            "sin theta needs equal shapes, got {:?} and {:?}",
            q1.shape(),
            q2.shape()
        )));
    }
    check_orthonormal(q1, "first basis")?;
    check_orthonormal(q2, "second basis")?;
    let residual = q1 - q2 * (q2.transpose() * q1);
    Ok(spectral_norm(&residual)?.min(1.0))
}
