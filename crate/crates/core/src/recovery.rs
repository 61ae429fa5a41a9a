//! Recovery of `M` from sampled columns `A`, sampled rows `B` and observed
//! entries: the bases `U_hat`, `V_hat` are the leading eigenvectors of
//! `A A^T` and `B B^T`, and the `r x r` core `Z*` minimizes the squared
//! misfit of `U_hat Z V_hat^T` on the observed entries. The estimate is
//! `M_hat = U_hat Z* V_hat^T`.
//!
//! The regression is solved through its `r^2 x r^2` normal matrix `K^T K`,
//! accumulated from rows of `K` generated on the fly. Observations are
//! split into fixed-size chunks reduced pairwise in chunk order, so results
//! are bit-identical for any thread count.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{ensure_finite, svd, symmetric_eigen, DenseMatrix};
use crate::sampling::{sample_columns, sample_entries, sample_rows, IndexSet, OmegaSet, RngStream};

/// Observations per accumulation chunk.
const CHUNK: usize = 256;

/// Relative eigen-gap below which the bases are flagged as degenerate.
pub const GAP_TOL: f64 = 1e-12;

/// `lambda_min(K^T K) < DEGENERACY_FACTOR * |Omega| / (nm)` is ill-posed.
pub const DEGENERACY_FACTOR: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct RecoveryInputs {
    pub a: DenseMatrix,
    pub b: DenseMatrix,
    pub omega: OmegaSet,
    pub r: usize,
}

impl RecoveryInputs {
    pub fn new(a: DenseMatrix, b: DenseMatrix, omega: OmegaSet, r: usize) -> Result<Self> {
        ensure_finite(&a, "A")?;
        ensure_finite(&b, "B")?;
        let (n, m) = omega.shape();
        if a.nrows() != n || b.nrows() != m {
            return Err(Error::invalid(format!(
                "A is {}x{} and B is {}x{} but omega is over {n}x{m}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols()
            )));
        }
        let d = a.ncols().min(b.ncols());
        if r == 0 || r > d {
            return Err(Error::invalid(format!(
                "target rank {r} must lie in 1..={d}"
            )));
        }
        Ok(Self { a, b, omega, r })
    }
}

/// Orthonormal estimates of the column and row spaces.
#[derive(Debug, Clone, PartialEq)]
pub struct Bases {
    pub u_hat: DenseMatrix,
    pub v_hat: DenseMatrix,
    /// Set when `lambda_r` and `lambda_{r+1}` of `AA^T` or `BB^T` coincide
    /// (relative to `lambda_1`), i.e. the rank-`r` subspace is not unique.
    pub degenerate_gap: bool,
}

impl Bases {
    pub fn rank(&self) -> usize {
        self.u_hat.ncols()
    }
}

/// Leading `r` eigenvectors of `X X^T`, read off the left singular vectors
/// of `X`, plus the degenerate-gap flag.
fn leading_eigvecs(x: &DenseMatrix, r: usize, what: &str) -> Result<(DenseMatrix, bool)> {
    let k = x.nrows().min(x.ncols());
    if r == 0 || r > k {
        return Err(Error::invalid(format!(
            "cannot take {r} leading eigenvectors from a {}x{} {what}",
            x.nrows(),
            x.ncols()
        )));
    }
    let f = svd(x)?;
    let top = f.sigma_at(0).powi(2);
    let gap = f.sigma_at(r - 1).powi(2) - f.sigma_at(r).powi(2);
    let degenerate = gap <= GAP_TOL * top.max(f64::MIN_POSITIVE);
    Ok((f.u.columns(0, r).into_owned(), degenerate))
}

/// `U_hat`, `V_hat`: the first `r` eigenvectors of `A A^T` and `B B^T`.
pub fn build_bases(a: &DenseMatrix, b: &DenseMatrix, r: usize) -> Result<Bases> {
    let (u_hat, du) = leading_eigvecs(a, r, "column sample")?;
    let (v_hat, dv) = leading_eigvecs(b, r, "row sample")?;
    Ok(Bases {
        u_hat,
        v_hat,
        degenerate_gap: du || dv,
    })
}

/// The least-squares system `min_z ||K z - y||^2` over `z = vec(Z)`.
///
/// Column `i * r + j` of `K` pairs with `Z[(i, j)]`; the row for an
/// observation `(a, b)` holds `U_hat[(a, i)] * V_hat[(b, j)]`.
#[derive(Debug, Clone)]
pub struct DesignSystem {
    bases: Bases,
    shape: (usize, usize),
    pairs: Vec<(usize, usize)>,
    y: DVector<f64>,
    normal: DenseMatrix,
    rhs: DVector<f64>,
}

fn reduce_pairwise<T>(mut parts: Vec<T>, combine: impl Fn(T, T) -> T) -> Option<T> {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(left) = it.next() {
            next.push(match it.next() {
                Some(right) => combine(left, right),
                None => left,
            });
        }
        parts = next;
    }
    parts.pop()
}

impl DesignSystem {
    pub fn rank(&self) -> usize {
        self.bases.rank()
    }

    pub fn unknowns(&self) -> usize {
        self.rank() * self.rank()
    }

    pub fn observations(&self) -> usize {
        self.pairs.len()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.shape
    }

    pub fn bases(&self) -> &Bases {
        &self.bases
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    /// `K^T K`.
    pub fn normal_matrix(&self) -> &DenseMatrix {
        &self.normal
    }

    /// `K^T y`.
    pub fn rhs(&self) -> &DVector<f64> {
        &self.rhs
    }

    pub fn column_index(&self, i: usize, j: usize) -> usize {
        i * self.rank() + j
    }

    pub fn column_pair(&self, c: usize) -> (usize, usize) {
        (c / self.rank(), c % self.rank())
    }

    /// Row of `K` for the observation at position `obs`.
    pub fn row(&self, obs: usize) -> DVector<f64> {
        design_row(&self.bases, self.pairs[obs])
    }

    /// `K` as a dense `|Omega| x r^2` matrix.
    pub fn k_matrix(&self) -> DenseMatrix {
        let mut k = DenseMatrix::zeros(self.observations(), self.unknowns());
        for obs in 0..self.observations() {
            k.row_mut(obs).copy_from(&self.row(obs).transpose());
        }
        k
    }

    /// `K vec(Z)`, i.e. the observed entries of `U_hat Z V_hat^T`.
    pub fn apply(&self, z: &DenseMatrix) -> DVector<f64> {
        let fitted = &self.bases.u_hat * z * self.bases.v_hat.transpose();
        DVector::from_iterator(self.observations(), self.pairs.iter().map(|&p| fitted[p]))
    }

    /// `||K vec(Z) - y||^2`.
    pub fn objective(&self, z: &DenseMatrix) -> f64 {
        (self.apply(z) - &self.y).norm_squared()
    }
}

fn design_row(bases: &Bases, (a, b): (usize, usize)) -> DVector<f64> {
    let r = bases.rank();
    let mut k = DVector::zeros(r * r);
    for i in 0..r {
        let ui = bases.u_hat[(a, i)];
        for j in 0..r {
            k[i * r + j] = ui * bases.v_hat[(b, j)];
        }
    }
    k
}

fn vec_to_core(z: &DVector<f64>, r: usize) -> DenseMatrix {
    DenseMatrix::from_fn(r, r, |i, j| z[i * r + j])
}

fn core_to_vec(z: &DenseMatrix) -> DVector<f64> {
    let r = z.nrows();
    DVector::from_fn(r * r, |c, _| z[(c / r, c % r)])
}

/// Builds `K^T K` and `K^T y` for the observed entries in `omega`.
pub fn assemble_design(bases: &Bases, omega: &OmegaSet) -> Result<DesignSystem> {
    if omega.is_empty() {
        return Err(Error::invalid("no observed entries"));
    }
    let (n, m) = omega.shape();
    if bases.u_hat.nrows() != n || bases.v_hat.nrows() != m {
        return Err(Error::invalid(format!(
            "bases are over {}x{} but omega is {n}x{m}",
            bases.u_hat.nrows(),
            bases.v_hat.nrows()
        )));
    }
    let p = bases.rank() * bases.rank();
    let pairs = omega.pairs().to_vec();
    let values = omega.values();

    let partials: Vec<(DenseMatrix, DVector<f64>)> = pairs
        .par_chunks(CHUNK)
        .zip(values.par_chunks(CHUNK))
        .map(|(ps, ys)| {
            let mut normal = DenseMatrix::zeros(p, p);
            let mut rhs = DVector::zeros(p);
            for (&pair, &y) in ps.iter().zip(ys) {
                let k = design_row(bases, pair);
                normal.ger(1.0, &k, &k, 1.0);
                rhs.axpy(y, &k, 1.0);
            }
            (normal, rhs)
        })
        .collect();
    let (normal, rhs) = reduce_pairwise(partials, |(n1, r1), (n2, r2)| (n1 + n2, r1 + r2))
        .expect("omega is nonempty");

    Ok(DesignSystem {
        bases: bases.clone(),
        shape: (n, m),
        pairs,
        y: DVector::from_column_slice(values),
        normal,
        rhs,
    })
}

/// `lambda_min(K^T K)`, the curvature of the objective (up to the factor 2).
pub fn strong_convexity_gamma(sys: &DesignSystem) -> Result<f64> {
    let eig = symmetric_eigen(sys.normal_matrix())?;
    Ok(eig.values[eig.values.len() - 1])
}

#[derive(Debug, Clone)]
pub struct CoreSolution {
    pub z_star: DenseMatrix,
    pub lambda_min_ktk: f64,
    /// Objective at `Z*`: `||K z* - y||^2 + ridge ||z*||^2`.
    pub residual: f64,
}

/// Minimizes `||K z - y||^2 + ridge ||z||^2` via a Cholesky factorization of
/// the normal matrix, followed by one step of iterative refinement.
pub fn solve_core(sys: &DesignSystem, ridge: f64) -> Result<CoreSolution> {
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(Error::invalid(format!(
            "ridge must be finite and >= 0, got {ridge}"
        )));
    }
    let r = sys.rank();
    let p = sys.unknowns();
    let (n, m) = sys.shape();
    let lambda_min = strong_convexity_gamma(sys)?;
    let threshold = DEGENERACY_FACTOR * sys.observations() as f64 / (n * m) as f64;
    if ridge == 0.0 && lambda_min < threshold {
        return Err(Error::IllPosed {
            lambda_min,
            threshold,
        });
    }

    let system = sys.normal_matrix() + DenseMatrix::identity(p, p) * ridge;
    let chol = system.cholesky().ok_or(Error::IllPosed {
        lambda_min,
        threshold,
    })?;
    let mut z = chol.solve(sys.rhs());

    // refine against the true residual rather than the squared system
    let gradient = |z: &DVector<f64>| {
        let fit = sys.apply(&vec_to_core(z, r)) - sys.y();
        let mut g = DVector::zeros(p);
        for (obs, f) in fit.iter().enumerate() {
            g.axpy(*f, &sys.row(obs), 1.0);
        }
        g + z * ridge
    };
    let correction = chol.solve(&gradient(&z));
    z -= correction;

    let z_star = vec_to_core(&z, r);
    let residual = sys.objective(&z_star) + ridge * z.norm_squared();
    Ok(CoreSolution {
        z_star,
        lambda_min_ktk: lambda_min,
        residual,
    })
}

/// Outcome of a recovery run; `M_hat` is held in factored form.
#[derive(Debug, Clone)]
pub struct RecoveryResult {
    pub z_star: DenseMatrix,
    pub bases: Bases,
    pub lambda_min_ktk: f64,
    pub residual: f64,
    pub regularizer_used: f64,
    pub observations: usize,
}

impl RecoveryResult {
    pub fn rank(&self) -> usize {
        self.z_star.nrows()
    }

    /// `U_hat Z* V_hat^T`.
    pub fn m_hat(&self) -> DenseMatrix {
        &self.bases.u_hat * &self.z_star * self.bases.v_hat.transpose()
    }

    /// `lambda_min(K^T K) / |Omega|`: the curvature per observation.
    pub fn gamma(&self) -> f64 {
        self.lambda_min_ktk / self.observations as f64
    }

    pub fn report(&self) -> RecoveryReport {
        RecoveryReport {
            r: self.rank(),
            ridge: self.regularizer_used,
            lambda_min_ktk: self.lambda_min_ktk,
            residual: self.residual,
            degenerate_gap: self.bases.degenerate_gap,
            z: self
                .z_star
                .row_iter()
                .map(|row| row.iter().copied().collect())
                .collect(),
        }
    }
}

/// JSON form of a [`RecoveryResult`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryReport {
    pub r: usize,
    pub ridge: f64,
    #[serde(rename = "lambda_min_KtK")]
    pub lambda_min_ktk: f64,
    pub residual: f64,
    pub degenerate_gap: bool,
    #[serde(rename = "Z")]
    pub z: Vec<Vec<f64>>,
}

/// Bases, design and core solve end to end.
pub fn recover(inputs: &RecoveryInputs, ridge: f64) -> Result<RecoveryResult> {
    let bases = build_bases(&inputs.a, &inputs.b, inputs.r)?;
    let sys = assemble_design(&bases, &inputs.omega)?;
    let sol = solve_core(&sys, ridge)?;
    Ok(RecoveryResult {
        z_star: sol.z_star,
        bases,
        lambda_min_ktk: sol.lambda_min_ktk,
        residual: sol.residual,
        regularizer_used: ridge,
        observations: inputs.omega.len(),
    })
}

/// Inputs drawn from a fully known matrix, with the sampled index sets.
#[derive(Debug, Clone)]
pub struct SampledInputs {
    pub inputs: RecoveryInputs,
    pub col_idx: IndexSet,
    pub row_idx: IndexSet,
}

/// Samples `d` columns, `d` rows and `omega_len` entries of `m` from child
/// streams 0, 1 and 2 of `rng`.
pub fn sample_inputs(
    m: &DenseMatrix,
    d: usize,
    omega_len: usize,
    r: usize,
    rng: &RngStream,
) -> Result<SampledInputs> {
    let cols = sample_columns(m, d, &rng.child(0))?;
    let rows = sample_rows(m, d, &rng.child(1))?;
    let omega = sample_entries(m, omega_len, &rng.child(2))?;
    Ok(SampledInputs {
        inputs: RecoveryInputs::new(cols.matrix, rows.matrix, omega, r)?,
        col_idx: cols.set,
        row_idx: rows.set,
    })
}

/// Flattens `Z` in the column order of `K`.
pub fn vectorize_core(z: &DenseMatrix) -> DVector<f64> {
    core_to_vec(z)
}
