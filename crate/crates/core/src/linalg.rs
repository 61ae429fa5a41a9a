//! Dense kernels shared by every other module: SVD and its rank split,
//! symmetric eigendecomposition, pseudo-inverse, orthogonal projectors and
//! matrix norms.
//!
//! Factorizations are delegated to `nalgebra`; this module adds validation,
//! descending ordering and a deterministic sign convention (the largest
//! magnitude entry of each singular/eigen vector is positive, ties going to
//! the lowest index).

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Real dense matrix used for `M`, the sampled blocks, bases and estimates.
pub type DenseMatrix = DMatrix<f64>;

/// Iteration cap handed to the QR-type iterations inside `nalgebra`.
pub const MAX_ITERATIONS: usize = 10_000;

/// Relative cut-off for singular values in [`pseudo_inverse`].
pub const PINV_DEFAULT_TOL: f64 = 1e-12;

/// `max|G - G^T| <= SYMMETRY_TOL * ||G||_F` is accepted as symmetric.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// `||Q^T Q - I||_F <= ORTHONORMAL_TOL` is accepted as orthonormal.
pub const ORTHONORMAL_TOL: f64 = 1e-8;

/// Rejects empty matrices and matrices carrying NaN or infinite entries.
pub fn ensure_finite(m: &DenseMatrix, what: &str) -> Result<()> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(Error::invalid(format!(
            "{what} must have at least one row and column"
        )));
    }
    if let Some(pos) = m.iter().position(|x| !x.is_finite()) {
        return Err(Error::invalid(format!(
            "{what} has a non-finite entry at ({}, {})",
            pos % m.nrows(),
            pos / m.nrows()
        )));
    }
    Ok(())
}

/// Thin SVD `M = U diag(sigma) V^T` with `k = min(n, m)` columns in `U` and `V`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors {
    pub u: DenseMatrix,
    pub sigma: DVector<f64>,
    pub v: DenseMatrix,
}

impl SvdFactors {
    pub fn rows(&self) -> usize {
        self.u.nrows()
    }

    pub fn cols(&self) -> usize {
        self.v.nrows()
    }

    /// `sigma_i` with a zero-based index; zero past the stored values.
    pub fn sigma_at(&self, i: usize) -> f64 {
        self.sigma.get(i).copied().unwrap_or(0.0)
    }

    /// Singular values at or below this are treated as exact zeros.
    pub fn zero_threshold(&self) -> f64 {
        let scale = self.rows().max(self.cols()) as f64;
        scale * f64::EPSILON * self.sigma_at(0)
    }

    /// Number of singular values above [`Self::zero_threshold`].
    pub fn rank(&self) -> usize {
        let tol = self.zero_threshold();
        self.sigma.iter().filter(|&&s| s > tol).count()
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        let mut us = self.u.clone();
        for (j, s) in self.sigma.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us * self.v.transpose()
    }
}

/// Index of the first entry with the largest magnitude.
fn pivot_index<'a>(values: impl Iterator<Item = &'a f64>) -> usize {
    let mut best = 0;
    let mut best_abs = -1.0;
    for (i, x) in values.enumerate() {
        if x.abs() > best_abs {
            best_abs = x.abs();
            best = i;
        }
    }
    best
}

/// Flips columns of `q` so the largest-magnitude entry of each is positive.
/// Returns which columns were flipped.
pub fn normalize_signs(q: &mut DenseMatrix) -> Vec<bool> {
    (0..q.ncols())
        .map(|j| {
            let p = pivot_index(q.column(j).iter());
            let flip = q[(p, j)] < 0.0;
            if flip {
                q.column_mut(j).neg_mut();
            }
            flip
        })
        .collect()
}

/// Convergence thresholds tried in order. nalgebra can return a wrong
/// factorization without reporting failure when the threshold sits exactly at
/// machine epsilon, so every attempt is checked against the input.
const SVD_EPS_LADDER: [f64; 3] = [8.0 * f64::EPSILON, 256.0 * f64::EPSILON, 1e-12];
const SVD_RECONSTRUCTION_TOL: f64 = 1e-10;

fn try_svd_ladder(m: &DenseMatrix) -> Option<(DenseMatrix, DVector<f64>, DenseMatrix)> {
    let scale = m.norm().max(f64::MIN_POSITIVE);
    for eps in SVD_EPS_LADDER {
        let Some(f) = m.clone().try_svd(true, true, eps, MAX_ITERATIONS) else {
            continue;
        };
        let u = f.u.expect("u requested");
        let v = f.v_t.expect("v requested").transpose();
        let sigma = f.singular_values;
        let rec = &u * DenseMatrix::from_diagonal(&sigma) * v.transpose();
        if (rec - m).norm() <= SVD_RECONSTRUCTION_TOL * scale {
            return Some((u, sigma, v));
        }
    }
    None
}

/// Thin SVD with descending singular values and the sign convention of
/// [`normalize_signs`] on `U`. Wide inputs are factored through their
/// transpose first; nalgebra converges more reliably on tall matrices.
pub fn svd(m: &DenseMatrix) -> Result<SvdFactors> {
    ensure_finite(m, "svd input")?;
    let (rows, cols) = m.shape();
    let transpose_first = cols > rows;
    let mt = m.transpose();
    let attempts: [(&DenseMatrix, bool); 2] = if transpose_first {
        [(&mt, true), (m, false)]
    } else {
        [(m, false), (&mt, true)]
    };
    for (input, transposed) in attempts {
        let Some((a, sigma, b)) = try_svd_ladder(input) else {
            continue;
        };
        let (mut u, mut v) = if transposed { (b, a) } else { (a, b) };
        for (j, flipped) in normalize_signs(&mut u).into_iter().enumerate() {
            if flipped {
                v.column_mut(j).neg_mut();
            }
        }
        return Ok(SvdFactors { u, sigma, v });
    }
    Err(Error::NoConvergence {
        op: "svd",
        max_iterations: MAX_ITERATIONS,
        rows,
        cols,
    })
}

/// Singular values only, in descending order.
pub fn singular_values(m: &DenseMatrix) -> Result<DVector<f64>> {
    svd(m).map(|f| f.sigma)
}

/// SVD split at rank `r`: the leading block `(U1, Sigma1, V1)` and the tail.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdPartition {
    pub r: usize,
    pub u1: DenseMatrix,
    pub u2: DenseMatrix,
    pub sigma1: DVector<f64>,
    pub sigma2: DVector<f64>,
    pub v1: DenseMatrix,
    pub v2: DenseMatrix,
}

impl SvdPartition {
    /// Concatenates the blocks back into the parent factors.
    pub fn reassemble(&self) -> SvdFactors {
        let k = self.r + self.sigma2.len();
        let rows = self.u1.nrows();
        let cols = self.v1.nrows();
        let mut u = DenseMatrix::zeros(rows, k);
        let mut v = DenseMatrix::zeros(cols, k);
        u.columns_mut(0, self.r).copy_from(&self.u1);
        u.columns_mut(self.r, k - self.r).copy_from(&self.u2);
        v.columns_mut(0, self.r).copy_from(&self.v1);
        v.columns_mut(self.r, k - self.r).copy_from(&self.v2);
        let sigma =
            DVector::from_iterator(k, self.sigma1.iter().chain(self.sigma2.iter()).copied());
        SvdFactors { u, sigma, v }
    }
}

pub fn partition_svd(f: &SvdFactors, r: usize) -> Result<SvdPartition> {
    let k = f.sigma.len();
    if r == 0 || r > k {
        return Err(Error::invalid(format!("rank cut r = {r} outside 1..={k}")));
    }
    Ok(SvdPartition {
        r,
        u1: f.u.columns(0, r).into_owned(),
        u2: f.u.columns(r, k - r).into_owned(),
        sigma1: f.sigma.rows(0, r).into_owned(),
        sigma2: f.sigma.rows(r, k - r).into_owned(),
        v1: f.v.columns(0, r).into_owned(),
        v2: f.v.columns(r, k - r).into_owned(),
    })
}

/// Eigenpairs of a symmetric matrix, eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: DVector<f64>,
    pub vectors: DenseMatrix,
}

pub fn symmetric_eigen(g: &DenseMatrix) -> Result<SymEigen> {
    ensure_finite(g, "symmetric eigensolver input")?;
    if !g.is_square() {
        return Err(Error::invalid(format!(
            "symmetric eigensolver needs a square matrix, got {}x{}",
            g.nrows(),
            g.ncols()
        )));
    }
    let asym = (g - g.transpose()).amax();
    if asym > SYMMETRY_TOL * g.norm() {
        return Err(Error::invalid(format!(
            "matrix is not symmetric: max|G - G^T| = {asym:e}"
        )));
    }
    let sym = (g + g.transpose()) * 0.5;
    let dim = sym.nrows();
    let scale = sym.norm().max(f64::MIN_POSITIVE);
    let eig = SVD_EPS_LADDER
        .iter()
        .filter_map(|&eps| SymmetricEigen::try_new(sym.clone(), eps, MAX_ITERATIONS))
        .find(|e| (e.recompose() - &sym).norm() <= SVD_RECONSTRUCTION_TOL * scale)
        .ok_or(Error::NoConvergence {
            op: "symmetric eigendecomposition",
            max_iterations: MAX_ITERATIONS,
            rows: dim,
            cols: dim,
        })?;
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = DVector::from_iterator(dim, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DenseMatrix::from_columns(
        &order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    normalize_signs(&mut vectors);
    Ok(SymEigen { values, vectors })
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn lambda_min(g: &DenseMatrix) -> Result<f64> {
    let eig = symmetric_eigen(g)?;
    Ok(eig.values[eig.values.len() - 1])
}

/// Eigenvectors belonging to the `r` largest eigenvalues of a symmetric `G`.
pub fn top_r_eigvecs(g: &DenseMatrix, r: usize) -> Result<DenseMatrix> {
    if r == 0 || r > g.nrows() {
        return Err(Error::invalid(format!(
            "requested {r} eigenvectors of a {}x{} matrix",
            g.nrows(),
            g.ncols()
        )));
    }
    let eig = symmetric_eigen(g)?;
    Ok(eig.vectors.columns(0, r).into_owned())
}

/// Moore-Penrose pseudo-inverse; singular values at or below `tol * sigma_0`
/// are treated as zero.
pub fn pseudo_inverse(m: &DenseMatrix, tol: f64) -> Result<DenseMatrix> {
    let f = svd(m)?;
    let cut = tol * f.sigma_at(0);
    let mut v_scaled = f.v.clone();
    for (j, &s) in f.sigma.iter().enumerate() {
        let inv = if s > cut && s > 0.0 { 1.0 / s } else { 0.0 };
        v_scaled.column_mut(j).scale_mut(inv);
    }
    Ok(v_scaled * f.u.transpose())
}

/// Orthonormal basis for the column space of `m`, dropping directions whose
/// singular value is at or below `rel_tol * sigma_0`.
pub fn range_basis(m: &DenseMatrix, rel_tol: f64) -> Result<DenseMatrix> {
    let f = svd(m)?;
    let cut = rel_tol * f.sigma_at(0);
    let keep = f.sigma.iter().filter(|&&s| s > cut && s > 0.0).count();
    Ok(f.u.columns(0, keep).into_owned())
}

pub fn check_orthonormal(q: &DenseMatrix, what: &str) -> Result<()> {
    ensure_finite(q, what)?;
    let gram = q.transpose() * q;
    let dev = (gram - DenseMatrix::identity(q.ncols(), q.ncols())).norm();
    if dev > ORTHONORMAL_TOL {
        return Err(Error::invalid(format!(
            "{what} does not have orthonormal columns: ||Q^T Q - I||_F = {dev:e}"
        )));
    }
    Ok(())
}

/// Orthogonal projector `Q Q^T` onto the span of orthonormal columns.
pub fn projector(q: &DenseMatrix) -> Result<DenseMatrix> {
    check_orthonormal(q, "projector basis")?;
    Ok(q * q.transpose())
}

pub fn spectral_norm(m: &DenseMatrix) -> Result<f64> {
    Ok(singular_values(m)?.max())
}

pub fn frobenius_norm(m: &DenseMatrix) -> f64 {
    m.norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    fn random_orthonormal(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        random(rows, cols, seed).qr().q()
    }

    /// Cyclic Jacobi eigenvalue iteration, kept here as an independent oracle.
    fn jacobi_eigenvalues(g: &DenseMatrix) -> Vec<f64> {
        let mut a = g.clone();
        let n = a.nrows();
        for _ in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[(i, j)].powi(2))
                .sum();
            if off < 1e-30 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    if a[(p, q)].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut d: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
        d.sort_by(|x, y| y.total_cmp(x));
        d
    }

    fn sin_theta_direct(q1: &DenseMatrix, q2: &DenseMatrix) -> f64 {
        let p = q2 * q2.transpose();
        let n = p.nrows();
        spectral_norm(&((DenseMatrix::identity(n, n) - p) * q1)).unwrap()
    }

    #[test]
    fn svd_of_identity() {
        let f = svd(&DenseMatrix::identity(3, 3)).unwrap();
        for s in f.sigma.iter() {
            assert!((s - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn svd_of_outer_product() {
        let a = DVector::from_vec(vec![1.0, -2.0, 2.0]);
        let b = DVector::from_vec(vec![3.0, 4.0]);
        let f = svd(&(&a * b.transpose())).unwrap();
        assert!((f.sigma[0] - a.norm() * b.norm()).abs() < 1e-12);
        assert!(f.sigma[1].abs() < 1e-12);
        assert_eq!(f.rank(), 1);
    }

    #[test]
    fn svd_matches_jacobi_oracle() {
        let m = random(4, 3, 7);
        let f = svd(&m).unwrap();
        let eig = jacobi_eigenvalues(&(m.transpose() * &m));
        for (s, l) in f.sigma.iter().zip(eig) {
            assert!((s - l.max(0.0).sqrt()).abs() < 1e-10, "{s} vs {}", l.sqrt());
        }
    }

    #[test]
    fn svd_factors_are_orthonormal_and_reconstruct() {
        for (rows, cols) in [(6, 4), (4, 6), (40, 40), (300, 300)] {
            let m = random(rows, cols, (rows * cols) as u64);
            let f = svd(&m).unwrap();
            let k = rows.min(cols);
            let eye = DenseMatrix::identity(k, k);
            assert!((f.u.transpose() * &f.u - &eye).amax() < 1e-10);
            assert!((f.v.transpose() * &f.v - &eye).amax() < 1e-10);
            assert!((f.reconstruct() - &m).norm() <= 1e-8 * m.norm());
            for w in f.sigma.as_slice().windows(2) {
                assert!(w[0] >= w[1] && w[1] >= 0.0);
            }
        }
    }

    #[test]
    fn svd_of_wide_rank_deficient_matrices() {
        // Row-sampled orthonormal factors: wide, low rank, repeated structure.
        for seed in 0..20u64 {
            let q = random_orthonormal(25, 4, seed);
            let rows: Vec<usize> = (0..4).map(|i| (i * 7 + seed as usize) % 25).collect();
            let core = random(4, 4, seed + 100);
            let m = (q.select_rows(&rows) * core * q.transpose()).map(|x| x * 3.0);
            let f = svd(&m).unwrap();
            assert_eq!(f.u.shape(), (4, 4));
            assert_eq!(f.v.shape(), (25, 4));
            assert!((f.reconstruct() - &m).norm() <= 1e-10 * m.norm().max(1.0));
            let eye = DenseMatrix::identity(4, 4);
            assert!((f.v.transpose() * &f.v - &eye).amax() < 1e-10);
        }
        let wide = random(3, 50, 9);
        let f = svd(&wide).unwrap();
        let ft = svd(&wide.transpose()).unwrap();
        for (a, b) in f.sigma.iter().zip(ft.sigma.iter()) {
            assert!((a - b).abs() < 1e-12 * a.max(1.0));
        }
    }

    #[test]
    fn sign_convention_makes_pivot_positive() {
        let f = svd(&random(7, 5, 3)).unwrap();
        for j in 0..f.u.ncols() {
            let p = pivot_index(f.u.column(j).iter());
            assert!(f.u[(p, j)] > 0.0);
        }
        let mut q = dmatrix![1.0, -0.5; -1.0, 0.5];
        normalize_signs(&mut q);
        // tie on the first column resolves to index 0, which is already positive
        assert_eq!(q[(0, 0)], 1.0);
        assert_eq!(q[(0, 1)], 0.5);
    }

    #[test]
    fn svd_rejects_nan() {
        let mut m = DenseMatrix::identity(2, 2);
        m[(1, 0)] = f64::NAN;
        assert!(matches!(svd(&m), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn partition_full_cut_and_reassembly() {
        let f = svd(&random(5, 3, 11)).unwrap();
        let full = partition_svd(&f, 3).unwrap();
        assert_eq!(full.u2.ncols(), 0);
        assert_eq!(full.sigma2.len(), 0);
        assert_eq!(full.v2.ncols(), 0);
        let one = partition_svd(&f, 1).unwrap();
        assert_eq!(one.sigma1[0], f.sigma[0]);
        assert!(one.sigma1.min() >= one.sigma2.max());
        for r in 1..=3 {
            assert_eq!(partition_svd(&f, r).unwrap().reassemble(), f);
        }
        assert!(partition_svd(&f, 0).is_err());
        assert!(partition_svd(&f, 4).is_err());
    }

    #[test]
    fn top_eigvecs_of_diagonal() {
        let g = DenseMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 2.0, 1.0]));
        let q = top_r_eigvecs(&g, 2).unwrap();
        let expected = DenseMatrix::identity(3, 2);
        assert!((q - expected).amax() < 1e-14);
    }

    #[test]
    fn top_eigvecs_recover_planted_subspace() {
        let q = random_orthonormal(8, 8, 5);
        let lambdas = DVector::from_vec(vec![9.0, 7.0, 5.0, 1.0, 0.5, 0.2, 0.1, 0.0]);
        let g = &q * DenseMatrix::from_diagonal(&lambdas) * q.transpose();
        let found = top_r_eigvecs(&g, 3).unwrap();
        let planted = q.columns(0, 3).into_owned();
        assert!(sin_theta_direct(&planted, &found) <= 1e-10);

        let all = top_r_eigvecs(&g, 8).unwrap();
        let eig = symmetric_eigen(&g).unwrap();
        let rebuilt = &all * DenseMatrix::from_diagonal(&eig.values) * all.transpose();
        assert!((rebuilt - g).amax() < 1e-12);
    }

    #[test]
    fn eigen_rejects_asymmetric_input() {
        let g = dmatrix![1.0, 2.0; 0.0, 1.0];
        assert!(matches!(
            top_r_eigvecs(&g, 1),
            Err(Error::InvalidArgument(_))
        ));
        assert!(top_r_eigvecs(&DenseMatrix::identity(2, 2), 3).is_err());
    }

    #[test]
    fn pinv_of_invertible_and_zero() {
        let m = dmatrix![2.0, 1.0; 1.0, 3.0];
        let inv = m.clone().try_inverse().unwrap();
        assert!((pseudo_inverse(&m, PINV_DEFAULT_TOL).unwrap() - inv).amax() < 1e-12);
        let z = DenseMatrix::zeros(3, 2);
        assert_eq!(
            pseudo_inverse(&z, PINV_DEFAULT_TOL).unwrap(),
            DenseMatrix::zeros(2, 3)
        );
    }

    #[test]
    fn pinv_matches_normal_equations() {
        let m = random(4, 2, 21);
        let p = pseudo_inverse(&m, PINV_DEFAULT_TOL).unwrap();
        let oracle = (m.transpose() * &m).try_inverse().unwrap() * m.transpose();
        assert!((&p - oracle).amax() < 1e-10);
        assert!((p * &m - DenseMatrix::identity(2, 2)).amax() < 1e-10);
    }

    #[test]
    fn pinv_moore_penrose_identities() {
        for seed in 0..10 {
            let m = random(6, 4, 100 + seed);
            let p = pseudo_inverse(&m, PINV_DEFAULT_TOL).unwrap();
            assert!((&m * &p * &m - &m).amax() < 1e-8);
            assert!((&p * &m * &p - &p).amax() < 1e-8);
            let mp = &m * &p;
            let pm = &p * &m;
            assert!((&mp - mp.transpose()).amax() < 1e-8);
            assert!((&pm - pm.transpose()).amax() < 1e-8);
        }
    }

    #[test]
    fn projector_cases() {
        let e1 = DenseMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        let p = projector(&e1).unwrap();
        assert_eq!(
            p,
            DenseMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0, 0.0]))
        );
        let q = random_orthonormal(4, 4, 9);
        assert!((projector(&q).unwrap() - DenseMatrix::identity(4, 4)).amax() < 1e-12);
        let q = random_orthonormal(10, 3, 4);
        let p = projector(&q).unwrap();
        assert!((&p * &p - &p).amax() < 1e-10);
        assert!((&p - p.transpose()).amax() < 1e-14);
        assert!(projector(&random(4, 2, 1)).is_err());
    }

    #[test]
    fn norms() {
        let d = DenseMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0]));
        assert!((spectral_norm(&d).unwrap() - 3.0).abs() < 1e-14);
        assert!((frobenius_norm(&d) - 10f64.sqrt()).abs() < 1e-14);
        let z = DenseMatrix::zeros(2, 3);
        assert_eq!(spectral_norm(&z).unwrap(), 0.0);
        assert_eq!(frobenius_norm(&z), 0.0);
        let m = random(5, 4, 2);
        assert!((spectral_norm(&m).unwrap() - svd(&m).unwrap().sigma[0]).abs() < 1e-10);
    }

    #[test]
    fn range_basis_drops_null_directions() {
        let a = random(6, 2, 8);
        let m = DenseMatrix::from_columns(&[
            a.column(0).into_owned(),
            a.column(1).into_owned(),
            a.column(0) * 2.0,
        ]);
        let q = range_basis(&m, 1e-12).unwrap();
        assert_eq!(q.ncols(), 2);
        check_orthonormal(&q, "basis").unwrap();
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn norm_sandwich(rows in 1usize..9, cols in 1usize..9, seed in any::<u64>()) {
                let m = random(rows, cols, seed);
                let fro = frobenius_norm(&m);
                let spec = spectral_norm(&m).unwrap();
                let k = rows.min(cols) as f64;
                prop_assert!(fro + 1e-12 >= spec);
                prop_assert!(spec + 1e-12 >= fro / k.sqrt());
            }

            #[test]
            fn projector_idempotent(rows in 2usize..12, seed in any::<u64>()) {
                let cols = 1 + (seed as usize % rows);
                let q = random_orthonormal(rows, cols, seed);
                let p = projector(&q).unwrap();
                prop_assert!((&p * &p - &p).amax() < 1e-10);
            }
        }
    }
}
