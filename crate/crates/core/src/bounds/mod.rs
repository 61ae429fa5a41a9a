//! Sample-size calculators and empirical checkers for the recovery
//! guarantees.
//!
//! Every checker returns a [`BoundReport`] that records the measured
//! quantity, the bound, whether the bound held, and whether the premises of
//! the guarantee were met on that instance. Logarithms are natural.

mod checks;
mod montecarlo;


use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

use crate::coherence::{mu_r_from_svd, numerical_rank_from_svd};
use crate::error::{Error, Result};
use crate::linalg::{svd, DenseMatrix, SvdFactors};

pub use checks::*;
pub use montecarlo::*;

/// Default confidence parameter for premise gating.
pub const DEFAULT_T: f64 = 3.0;

/// Relative slack used when comparing a measured quantity with its bound.
pub const SLACK: f64 = 1e-9;

/// Direction of the inequality being checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    /// `lhs <= rhs`
    AtMost,
    /// `lhs >= rhs`
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub relation: Relation,
    pub holds: bool,
    pub premises_met: bool,
    pub params: BTreeMap<String, Value>,
}

impl BoundReport {
    pub fn new(name: &str, lhs: f64, rhs: f64, relation: Relation, premises_met: bool) -> Self {
        let slack = SLACK * rhs.abs().max(1.0);
        let holds = match relation {
            Relation::AtMost => lhs <= rhs + slack,
            Relation::AtLeast => lhs >= rhs - slack,
        };
        BoundReport {
            name: name.to_string(),
            lhs,
            rhs,
            relation,
            holds,
            premises_met,
            params: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    /// A premise-satisfying instance on which the bound failed.
    pub fn is_violation(&self) -> bool {
        self.premises_met && !self.holds
    }
}

/// Minimum sample budgets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SampleSize {
    pub d_min: usize,
    pub omega_min: usize,
}

fn positive(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::invalid(format!("{name} must be positive, got {x}")));
    }
    Ok(())
}

fn ceil_count(x: f64) -> usize {
    x.ceil().max(0.0) as usize
}

/// `d >= 7 mu r (t + ln r)` and `|Omega| >= 7 mu^2 r^2 (t + 2 ln r)`.
pub fn sample_size_low_rank(mu: f64, r: usize, t: f64) -> Result<SampleSize> {
    if !(mu >= 1.0 && mu.is_finite()) {
        return Err(Error::invalid(format!("mu must be >= 1, got {mu}")));
    }
    if r == 0 {
        return Err(Error::invalid("rank must be positive"));
    }
    positive("t", t)?;
    let (rf, ln_r) = (r as f64, (r as f64).ln());
    Ok(SampleSize {
        d_min: ceil_count(7.0 * mu * rf * (t + ln_r)),
        omega_min: ceil_count(7.0 * mu * mu * rf * rf * (t + 2.0 * ln_r)),
    })
}

/// Budgets for a numerically low-rank target with incoherence `mu_l` and
/// numerical rank `r_num`:
/// `d >= 16 (mu_l r_num + 1)(t + ln n)` and
/// `|Omega| >= 7 (2 mu_l r_num + 72 (n/d)(mu_l r_num + 1)(t + ln n))^2 (t + 2 ln r)`.
pub fn sample_size_full_rank(
    mu_l: f64,
    r_num: f64,
    t: f64,
    n: usize,
    d: usize,
    r: usize,
) -> Result<SampleSize> {
    positive("mu(lambda)", mu_l)?;
    positive("numerical rank", r_num)?;
    positive("t", t)?;
    if n == 0 || d == 0 || r == 0 {
        return Err(Error::invalid("n, d and r must be positive"));
    }
    let mr = mu_l * r_num;
    let ln_n = (n as f64).ln();
    let inner = 2.0 * mr + 72.0 * (n as f64 / d as f64) * (mr + 1.0) * (t + ln_n);
    Ok(SampleSize {
        d_min: ceil_count(16.0 * (mr + 1.0) * (t + ln_n)),
        omega_min: ceil_count(7.0 * inner * inner * (t + 2.0 * (r as f64).ln())),
    })
}

/// `d >= 14 mu_l r_num (t + ln r)`: the column budget of the subspace
/// bound for numerically low-rank targets.
pub fn delta_d_full_rank(mu_l: f64, r_num: f64, t: f64, r: usize) -> usize {
    ceil_count(14.0 * mu_l * r_num * (t + (r as f64).ln()))
}

/// `d >= (4 / delta^2)(mu_l r_num + 1)(t + ln n)`.
pub fn h_sandwich_d(mu_l: f64, r_num: f64, t: f64, n: usize, delta: f64) -> usize {
    ceil_count(4.0 / (delta * delta) * (mu_l * r_num + 1.0) * (t + (n as f64).ln()))
}

/// `(4/d)(mu_l r_num + 1)(t + ln n)`.
pub fn delta_sq(mu_l: f64, r_num: f64, t: f64, n: usize, d: usize) -> f64 {
    4.0 / d as f64 * (mu_l * r_num + 1.0) * (t + (n as f64).ln())
}

/// The column count minimizing `d n + n^2 / d^2` to leading order:
/// `round(n^(1/3))`.
pub fn optimal_d(n: usize) -> usize {
    ((n as f64).cbrt().round() as usize).max(1)
}

/// `d n + n^2 / d^2`.
pub fn total_observations(n: usize, d: usize) -> f64 {
    let (n, d) = (n as f64, d as f64);
    d * n + n * n / (d * d)
}

/// A matrix together with its SVD, shared by the checkers.
#[derive(Debug, Clone)]
pub struct Target {
    pub matrix: DenseMatrix,
    pub svd: SvdFactors,
}

impl Target {
    pub fn new(matrix: DenseMatrix) -> Result<Self> {
        let svd = svd(&matrix)?;
        Ok(Target { matrix, svd })
    }

    pub fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }

    /// The larger dimension; logarithmic factors use it.
    pub fn n_max(&self) -> usize {
        self.nrows().max(self.ncols())
    }

    /// `sigma_i` with one-based index, zero past the end.
    pub fn sigma(&self, i: usize) -> f64 {
        if i == 0 {
            return f64::INFINITY;
        }
        self.svd.sigma_at(i - 1)
    }

    pub fn rank(&self) -> usize {
        self.svd.rank()
    }

    pub fn mu_r(&self, r: usize) -> Result<f64> {
        Ok(mu_r_from_svd(&self.svd, r)?.mu)
    }

    /// `lambda = sigma_r^2 / (mn)`.
    pub fn lambda_for_rank(&self, r: usize) -> f64 {
        self.sigma(r).powi(2) / (self.nrows() * self.ncols()) as f64
    }

    /// `sigma_r >= sqrt(2) sigma_{r+1}`.
    pub fn gap_premise(&self, r: usize) -> bool {
        self.sigma(r) >= std::f64::consts::SQRT_2 * self.sigma(r + 1)
    }

    pub fn full_rank_gate(&self, r: usize, d: usize, t: f64) -> Result<FullRankGate> {
        FullRankGate::new(self, r, d, t)
    }
}

/// Premise quantities for numerically low-rank targets at
/// `lambda = sigma_r^2 / (mn)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FullRankGate {
    pub r: usize,
    pub d: usize,
    pub t: f64,
    pub lambda: f64,
    pub mu_lambda: f64,
    pub numerical_rank: f64,
    pub gap_premise: bool,
    /// `16 (mu r + 1)(t + ln n)`.
    pub d_min: usize,
    /// `14 mu r (t + ln r)`.
    pub delta_d_min: usize,
    pub omega_min: usize,
}

impl FullRankGate {
    pub fn new(target: &Target, r: usize, d: usize, t: f64) -> Result<Self> {
        if r == 0 || r > target.svd.sigma.len() {
            return Err(Error::invalid(format!(
                "rank {r} is outside 1..={}",
                target.svd.sigma.len()
            )));
        }
        let lambda = target.lambda_for_rank(r);
        if lambda <= 0.0 {
            return Err(Error::invalid(format!(
                "sigma_{r} is zero, so lambda = sigma_r^2/mn is not positive"
            )));
        }
        let nr = numerical_rank_from_svd(&target.svd, lambda)?;
        let sizes = sample_size_full_rank(nr.mu_lambda, nr.value, t, target.n_max(), d, r)?;
        Ok(FullRankGate {
            r,
            d,
            t,
            lambda,
            mu_lambda: nr.mu_lambda,
            numerical_rank: nr.value,
            gap_premise: target.gap_premise(r),
            d_min: sizes.d_min,
            delta_d_min: delta_d_full_rank(nr.mu_lambda, nr.value, t, r),
            omega_min: sizes.omega_min,
        })
    }

    pub fn d_premise(&self) -> bool {
        self.d >= self.d_min
    }

    pub fn omega_premise(&self, omega_len: usize) -> bool {
        omega_len >= self.omega_min
    }

    pub fn delta_sq(&self, n: usize) -> f64 {
        delta_sq(self.mu_lambda, self.numerical_rank, self.t, n, self.d)
    }
}
