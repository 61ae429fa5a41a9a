use serde::Serialize;

use super::{sample_size_low_rank, BoundReport, FullRankGate, Relation, Target};
use crate::coherence::{mu_hat, numerical_rank_from_svd, sin_theta};
use crate::error::{Error, Result};
use crate::linalg::{
    lambda_min, partition_svd, pseudo_inverse, range_basis, spectral_norm, symmetric_eigen,
    DenseMatrix, PINV_DEFAULT_TOL,
};
use crate::recovery::{Bases, DesignSystem, RecoveryResult};
use crate::sampling::{IndexKind, IndexSet};

fn check_rank(target: &Target, r: usize) -> Result<()> {
    let k = target.svd.sigma.len();
    if r == 0 || r > k {
        return Err(Error::invalid(format!("rank {r} is outside 1..={k}")));
    }
    Ok(())
}

fn check_bases(target: &Target, bases: &Bases) -> Result<()> {
    if bases.u_hat.nrows() != target.nrows() || bases.v_hat.nrows() != target.ncols() {
        return Err(Error::invalid(format!(
            "bases of shape {:?}/{:?} do not match a {}x{} target",
            bases.u_hat.shape(),
            bases.v_hat.shape(),
            target.nrows(),
            target.ncols()
        )));
    }
    Ok(())
}

fn sq_norm(m: &DenseMatrix) -> Result<f64> {
    Ok(spectral_norm(m)?.powi(2))
}

/// `M P_V_hat` and `P_U_hat M`.
fn one_sided(target: &Target, bases: &Bases) -> (DenseMatrix, DenseMatrix) {
    let m = &target.matrix;
    let (u, v) = (&bases.u_hat, &bases.v_hat);
    let right = (m * v) * v.transpose();
    let left = u * (u.transpose() * m);
    (right, left)
}

fn two_sided(target: &Target, bases: &Bases) -> DenseMatrix {
    let (u, v) = (&bases.u_hat, &bases.v_hat);
    u * (u.transpose() * &target.matrix * v) * v.transpose()
}

/// Low-rank subspace premise `d >= 7 mu(r) r (t + ln r)`.
fn low_rank_d_premise(target: &Target, r: usize, d: usize, t: f64) -> Result<(bool, usize)> {
    let d_min = sample_size_low_rank(target.mu_r(r)?, r, t)?.d_min;
    Ok((d >= d_min, d_min))
}

/// `||M - M P_V_hat||^2 <= sigma_{r+1}^2 (1 + 2m/d)` and
/// `||M - P_U_hat M||^2 <= sigma_{r+1}^2 (1 + 2n/d)`.
pub fn check_projection(
    target: &Target,
    bases: &Bases,
    r: usize,
    d: usize,
    t: f64,
) -> Result<[BoundReport; 2]> {
    check_rank(target, r)?;
    check_bases(target, bases)?;
    let (n, m) = (target.nrows() as f64, target.ncols() as f64);
    let s2 = target.sigma(r + 1).powi(2);
    let (premise, d_min) = low_rank_d_premise(target, r, d, t)?;
    let (right, left) = one_sided(target, bases);
    let v_side = BoundReport::new(
        "projection-v",
        sq_norm(&(&target.matrix - right))?,
        s2 * (1.0 + 2.0 * m / d as f64),
        Relation::AtMost,
        premise,
    );
    let u_side = BoundReport::new(
        "projection-u",
        sq_norm(&(&target.matrix - left))?,
        s2 * (1.0 + 2.0 * n / d as f64),
        Relation::AtMost,
        premise,
    );
    let tag = |rep: BoundReport| {
        rep.with("r", r)
            .with("d", d)
            .with("t", t)
            .with("d_min", d_min)
            .with("sigma_r1", target.sigma(r + 1))
    };
    Ok([tag(v_side), tag(u_side)])
}

/// `Delta = ||M - P_U_hat M P_V_hat||^2 <= 4 sigma_{r+1}^2 (1 + (m+n)/d)`.
///
/// Exactly low-rank targets are gated by `d >= 7 mu(r) r (t + ln r)`;
/// otherwise `lambda = sigma_r^2/(mn)` and the gate is
/// `d >= 14 mu(lambda) r(M, lambda) (t + ln r)`.
pub fn check_delta(
    target: &Target,
    bases: &Bases,
    r: usize,
    d: usize,
    t: f64,
) -> Result<BoundReport> {
    check_rank(target, r)?;
    check_bases(target, bases)?;
    let (n, m) = (target.nrows() as f64, target.ncols() as f64);
    let lhs = sq_norm(&(&target.matrix - two_sided(target, bases)))?;
    let rhs = 4.0 * target.sigma(r + 1).powi(2) * (1.0 + (m + n) / d as f64);
    let low_rank = target.rank() <= r;
    let (premise, d_min) = if low_rank {
        low_rank_d_premise(target, r, d, t)?
    } else {
        let gate = FullRankGate::new(target, r, d, t)?;
        (d >= gate.delta_d_min, gate.delta_d_min)
    };
    Ok(
        BoundReport::new("delta", lhs, rhs, Relation::AtMost, premise)
            .with("r", r)
            .with("d", d)
            .with("t", t)
            .with("d_min", d_min)
            .with("variant", if low_rank { "low-rank" } else { "full-rank" }),
    )
}

/// `Delta <= 2 ||M - M P_V_hat||^2 + 2 ||(M - P_U_hat M) P_V_hat||^2`,
/// which holds for any pair of orthonormal bases.
pub fn check_delta_triangle(target: &Target, bases: &Bases) -> Result<BoundReport> {
    check_bases(target, bases)?;
    let m = &target.matrix;
    let v = &bases.v_hat;
    let (right, left) = one_sided(target, bases);
    let lhs = sq_norm(&(m - two_sided(target, bases)))?;
    let right_err = sq_norm(&(m - right))?;
    let left_err = m - left;
    let projected = sq_norm(&((&left_err * v) * v.transpose()))?;
    let loose = 2.0 * right_err + 2.0 * sq_norm(&left_err)?;
    Ok(BoundReport::new(
        "delta-triangle",
        lhs,
        2.0 * right_err + 2.0 * projected,
        Relation::AtMost,
        true,
    )
    .with("rhs_unprojected", loose))
}

/// `||M - M_hat||^2 <= 2 (Delta + Delta / gamma)` where `gamma` is the
/// curvature of the objective per observation, `lambda_min(K^T K)/|Omega|`.
pub fn check_combine(
    target: &Target,
    m_hat: &DenseMatrix,
    delta: f64,
    gamma: f64,
) -> Result<BoundReport> {
    if m_hat.shape() != target.matrix.shape() {
        return Err(Error::invalid("estimate and target shapes differ"));
    }
    let lhs = sq_norm(&(&target.matrix - m_hat))?;
    let premise = gamma > 0.0 && delta >= 0.0 && delta.is_finite();
    let rhs = if gamma > 0.0 {
        2.0 * (delta + delta / gamma)
    } else {
        f64::INFINITY
    };
    Ok(
        BoundReport::new("combine", lhs, rhs, Relation::AtMost, premise)
            .with("delta", delta)
            .with("gamma", gamma),
    )
}

/// [`check_combine`] with `Delta` and `gamma` measured on the run itself.
pub fn check_combine_run(target: &Target, result: &RecoveryResult) -> Result<BoundReport> {
    check_bases(target, &result.bases)?;
    let delta = sq_norm(&(&target.matrix - two_sided(target, &result.bases)))?;
    let nm = (target.nrows() * target.ncols()) as f64;
    let gamma_mn = result.lambda_min_ktk * nm / result.observations as f64;
    Ok(check_combine(target, &result.m_hat(), delta, result.gamma())?.with("gamma_mn", gamma_mn))
}

/// Columns of `V_1^T S` and `V_2^T S` for the canonical selection `S`.
fn selected_rows(v: &DenseMatrix, idx: &IndexSet) -> DenseMatrix {
    v.select_rows(idx.indices().iter()).transpose()
}

fn check_columns(target: &Target, idx: &IndexSet) -> Result<()> {
    if idx.kind() != IndexKind::ColIndices || idx.bound() != target.ncols() {
        return Err(Error::invalid(format!(
            "expected column indices into {} columns",
            target.ncols()
        )));
    }
    Ok(())
}

/// `||M - P_Y M||^2 <= ||Sigma_2||^2 + ||Sigma_2 Omega_2 Omega_1^+||^2` with
/// `Y = M S`, `Omega_1 = V_1^T S`, `Omega_2 = V_2^T S`; premise is that
/// `Omega_1` has full row rank.
pub fn check_halko(target: &Target, col_idx: &IndexSet, r: usize) -> Result<BoundReport> {
    check_rank(target, r)?;
    check_columns(target, col_idx)?;
    let part = partition_svd(&target.svd, r)?;
    let y = target.matrix.select_columns(col_idx.indices().iter());
    let tol = target.n_max() as f64 * f64::EPSILON;
    let q = range_basis(&y, tol)?;
    let lhs = sq_norm(&(&target.matrix - &q * (q.transpose() * &target.matrix)))?;

    let omega1 = selected_rows(&part.v1, col_idx);
    let s1 = crate::linalg::svd(&omega1)?;
    let full_row_rank = s1.sigma.len() == r && s1.rank() == r;
    let rhs = if part.sigma2.is_empty() {
        0.0
    } else {
        let omega2 = selected_rows(&part.v2, col_idx);
        let sigma2 = DenseMatrix::from_diagonal(&part.sigma2);
        let cross = &sigma2 * omega2 * pseudo_inverse(&omega1, PINV_DEFAULT_TOL)?;
        part.sigma2[0].powi(2) + sq_norm(&cross)?
    };
    Ok(
        BoundReport::new("halko", lhs, rhs, Relation::AtMost, full_row_rank)
            .with("r", r)
            .with("d", col_idx.len())
            .with(
                "sigma_min_omega1",
                s1.sigma.iter().copied().fold(f64::INFINITY, f64::min),
            ),
    )
}

/// `lambda_min(Omega_1 Omega_1^T) >= d / (2m)`, gated by
/// `d >= 7 mu(r) r (t + ln r)`.
pub fn check_omega1_spectrum(
    target: &Target,
    col_idx: &IndexSet,
    r: usize,
    t: f64,
) -> Result<BoundReport> {
    check_rank(target, r)?;
    check_columns(target, col_idx)?;
    let d = col_idx.len();
    let part = partition_svd(&target.svd, r)?;
    let omega1 = selected_rows(&part.v1, col_idx);
    let lhs = lambda_min(&(&omega1 * omega1.transpose()))?;
    let (premise, d_min) = low_rank_d_premise(target, r, d, t)?;
    Ok(BoundReport::new(
        "omega1-spectrum",
        lhs,
        d as f64 / (2.0 * target.ncols() as f64),
        Relation::AtLeast,
        premise,
    )
    .with("r", r)
    .with("d", d)
    .with("t", t)
    .with("d_min", d_min))
}

/// `lambda_min(K^T K) >= |Omega| / (2mn)`, gated by
/// `|Omega| >= 7 mu_hat^2 r^2 (t + 2 ln r)`.
pub fn check_strong_convexity(sys: &DesignSystem, t: f64) -> Result<BoundReport> {
    let (n, m) = sys.shape();
    let r = sys.rank();
    let omega = sys.observations();
    let mu = mu_hat(&sys.bases().u_hat, &sys.bases().v_hat)?.mu;
    let omega_min = sample_size_low_rank(mu, r, t)?.omega_min;
    let lhs = lambda_min(sys.normal_matrix())?;
    Ok(BoundReport::new(
        "strong-convexity",
        lhs,
        omega as f64 / (2.0 * (n * m) as f64),
        Relation::AtLeast,
        omega >= omega_min,
    )
    .with("r", r)
    .with("omega", omega)
    .with("t", t)
    .with("mu_hat", mu)
    .with("omega_min", omega_min))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    A,
    B,
}

/// Regularized Gram matrices of the target and of its sample:
/// `H_A = lambda I + M M^T/(mn)`, `H_A_hat = lambda I + A A^T/(dn)` and the
/// `B` twins.
#[derive(Debug, Clone)]
pub struct HPair {
    pub h: DenseMatrix,
    pub h_hat: DenseMatrix,
    pub side: Side,
    pub lambda: f64,
    pub d: usize,
}

/// `sample` is `A` (`n x d`, sampled columns) for side A and `B` (`m x d`,
/// transposed sampled rows) for side B.
pub fn build_h_pair(
    target: &Target,
    sample: &DenseMatrix,
    side: Side,
    lambda: f64,
) -> Result<HPair> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!(
            "lambda must be positive so that H is invertible, got {lambda}"
        )));
    }
    let (n, m) = (target.nrows(), target.ncols());
    let (dim, other, gram) = match side {
        Side::A => (n, n, &target.matrix * target.matrix.transpose()),
        Side::B => (m, m, target.matrix.transpose() * &target.matrix),
    };
    if sample.nrows() != dim || sample.ncols() == 0 {
        return Err(Error::invalid(format!(
            "side {side:?} sample must have {dim} rows, got {}x{}",
            sample.nrows(),
            sample.ncols()
        )));
    }
    let d = sample.ncols();
    let eye = DenseMatrix::identity(dim, dim);
    let h = &eye * lambda + gram / (n * m) as f64;
    let h_hat = &eye * lambda + (sample * sample.transpose()) / (d * other) as f64;
    Ok(HPair {
        h,
        h_hat,
        side,
        lambda,
        d,
    })
}

/// `H^{1/2}` and `H^{-1/2}` of a symmetric positive definite matrix.
fn sqrt_pair(h: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix)> {
    let eig = symmetric_eigen(h)?;
    if eig.values.iter().any(|&x| x <= 0.0) {
        return Err(Error::invalid("H must be positive definite"));
    }
    let q = &eig.vectors;
    let scaled = |f: fn(f64) -> f64| {
        let mut qs = q.clone();
        for (j, &x) in eig.values.iter().enumerate() {
            qs.column_mut(j).scale_mut(f(x));
        }
        qs * q.transpose()
    };
    Ok((scaled(f64::sqrt), scaled(|x| 1.0 / x.sqrt())))
}

/// `D = H^{-1/2} H_hat H^{-1/2}`.
pub fn relative_gram(pair: &HPair) -> Result<DenseMatrix> {
    let (_, inv_sqrt) = sqrt_pair(&pair.h)?;
    let d = &inv_sqrt * &pair.h_hat * &inv_sqrt;
    Ok((&d + d.transpose()) * 0.5)
}

/// `1 - delta <= lambda_k(D) <= 1 + delta` for all `k`, gated by
/// `d >= (4/delta^2)(mu(lambda) r(M, lambda) + 1)(t + ln n)`.
pub fn check_h_sandwich(target: &Target, pair: &HPair, delta: f64, t: f64) -> Result<BoundReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    let eig = symmetric_eigen(&relative_gram(pair)?)?;
    let hi = eig.values[0];
    let lo = eig.values[eig.values.len() - 1];
    let lhs = (hi - 1.0).abs().max((1.0 - lo).abs());
    // The numerical rank of a zero target is undefined; no premise applies.
    let d_min = numerical_rank_from_svd(&target.svd, pair.lambda)
        .ok()
        .map(|nr| super::h_sandwich_d(nr.mu_lambda, nr.value, t, target.n_max(), delta));
    let name = match pair.side {
        Side::A => "h-sandwich-a",
        Side::B => "h-sandwich-b",
    };
    let premise = d_min.is_some_and(|x| pair.d >= x);
    Ok(
        BoundReport::new(name, lhs, delta, Relation::AtMost, premise)
            .with("eig_min", lo)
            .with("eig_max", hi)
            .with("d", pair.d)
            .with("d_min", d_min)
            .with("lambda", pair.lambda)
            .with("t", t),
    )
}

/// `mu_hat <= (2 r(M, lambda)/r) mu(lambda) + 18 n delta^2 / r` at
/// `lambda = sigma_r^2/(mn)`, gated by the column budget
/// `d >= 16 (mu r + 1)(t + ln n)` and `sigma_r >= sqrt(2) sigma_{r+1}`.
pub fn check_mu_hat_bound(
    target: &Target,
    bases: &Bases,
    r: usize,
    d: usize,
    t: f64,
) -> Result<BoundReport> {
    check_rank(target, r)?;
    check_bases(target, bases)?;
    let gate = FullRankGate::new(target, r, d, t)?;
    let n = target.n_max();
    let dsq = gate.delta_sq(n);
    let rf = r as f64;
    let rhs = 2.0 * gate.numerical_rank / rf * gate.mu_lambda + 18.0 * n as f64 * dsq / rf;
    let lhs = mu_hat(&bases.u_hat, &bases.v_hat)?.mu;
    Ok(BoundReport::new(
        "mu-hat",
        lhs,
        rhs,
        Relation::AtMost,
        gate.d_premise() && gate.gap_premise,
    )
    .with("r", r)
    .with("d", d)
    .with("t", t)
    .with("delta_sq", dsq)
    .with("lambda", gate.lambda)
    .with("mu_lambda", gate.mu_lambda)
    .with("numerical_rank", gate.numerical_rank)
    .with("gap_premise", gate.gap_premise)
    .with("d_min", gate.d_min))
}

/// Eigen-gap, perturbation size and subspace distance for the graded pair
/// `S^T H S`, `S^T H_tilde S`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationTerms {
    pub delta_lambda: f64,
    pub delta_h: f64,
    pub sin_theta: f64,
    /// `||H^{-1}||_2 ||H - H_tilde||_2`; must be below one.
    pub rel_perturbation: f64,
}

fn perturbation_terms(
    h: &DenseMatrix,
    h_tilde: &DenseMatrix,
    grading: Option<&DenseMatrix>,
    r: usize,
) -> Result<PerturbationTerms> {
    if h.shape() != h_tilde.shape() || !h.is_square() {
        return Err(Error::invalid("H and H_tilde must be square of equal size"));
    }
    let (a, a_tilde) = match grading {
        Some(s) => {
            if s.nrows() != h.nrows() {
                return Err(Error::invalid(
                    "grading matrix has the wrong number of rows",
                ));
            }
            (s.transpose() * h * s, s.transpose() * h_tilde * s)
        }
        None => (h.clone(), h_tilde.clone()),
    };
    let sym = |x: DenseMatrix| (&x + x.transpose()) * 0.5;
    let (a, a_tilde) = (sym(a), sym(a_tilde));
    let size = a.nrows();
    if r == 0 || r >= size {
        return Err(Error::invalid(format!("rank {r} must lie in 1..{size}")));
    }
    let ea = symmetric_eigen(&a)?;
    let eb = symmetric_eigen(&a_tilde)?;
    let (l_r, l_next) = (ea.values[r - 1], ea.values[r]);
    let delta_lambda = if l_r > 0.0 {
        (std::f64::consts::SQRT_2 * (1.0 - l_next / l_r)).min(std::f64::consts::FRAC_1_SQRT_2)
    } else {
        f64::NEG_INFINITY
    };
    let eh = symmetric_eigen(&sym(h.clone()))?;
    let min_abs = eh
        .values
        .iter()
        .fold(f64::INFINITY, |acc, x| acc.min(x.abs()));
    let inv_norm = if min_abs > 0.0 {
        1.0 / min_abs
    } else {
        f64::INFINITY
    };
    let rel_perturbation = inv_norm * spectral_norm(&(h - h_tilde))?;
    let delta_h = if rel_perturbation < 1.0 {
        rel_perturbation / (1.0 - rel_perturbation).sqrt()
    } else {
        f64::INFINITY
    };
    let u1 = ea.vectors.columns(0, r).into_owned();
    let u1_tilde = eb.vectors.columns(0, r).into_owned();
    Ok(PerturbationTerms {
        delta_lambda,
        delta_h,
        sin_theta: sin_theta(&u1, &u1_tilde)?,
        rel_perturbation,
    })
}

/// `||sin Theta(U_1, U_1_tilde)||_2 <= Delta_H / (Delta_lambda - Delta_H/2)
/// (1 + Delta_H Delta_lambda / 16)` for the leading `r` eigenvectors of
/// `S^T H S` and `S^T H_tilde S`, when `Delta_lambda >= Delta_H / 2`.
pub fn check_sin_theta_perturbation(
    h: &DenseMatrix,
    h_tilde: &DenseMatrix,
    grading: Option<&DenseMatrix>,
    r: usize,
) -> Result<BoundReport> {
    let p = perturbation_terms(h, h_tilde, grading, r)?;
    let premise =
        p.rel_perturbation < 1.0 && p.delta_lambda >= p.delta_h / 2.0 && p.delta_lambda > 0.0;
    let rhs = if premise && p.delta_lambda > p.delta_h / 2.0 {
        p.delta_h / (p.delta_lambda - p.delta_h / 2.0) * (1.0 + p.delta_h * p.delta_lambda / 16.0)
    } else {
        f64::INFINITY
    };
    Ok(
        BoundReport::new("sin-theta", p.sin_theta, rhs, Relation::AtMost, premise)
            .with("r", r)
            .with("delta_lambda", p.delta_lambda)
            .with("delta_h", finite_or_null(p.delta_h))
            .with("rel_perturbation", finite_or_null(p.rel_perturbation)),
    )
}

fn finite_or_null(x: f64) -> serde_json::Value {
    if x.is_finite() {
        x.into()
    } else {
        serde_json::Value::Null
    }
}

/// The perturbation bound on sampled Gram matrices, written as
/// `H = H^{1/2} I H^{1/2}` and `H_hat = H^{1/2} D H^{1/2}`, together with its
/// specialized form `||sin Theta|| <= 3 sqrt(2) delta` where
/// `delta = ||D - I||_2`, gated by `delta <= 1/2` and the spectral gap.
pub fn check_sin_theta_sampled(
    target: &Target,
    pair: &HPair,
    r: usize,
) -> Result<[BoundReport; 2]> {
    let (sqrt_h, _) = sqrt_pair(&pair.h)?;
    let d = relative_gram(pair)?;
    let eye = DenseMatrix::identity(d.nrows(), d.ncols());
    let raw = check_sin_theta_perturbation(&eye, &d, Some(&sqrt_h), r)?;
    let delta = spectral_norm(&(&d - &eye))?;
    let gap = target.gap_premise(r);
    let specialized = BoundReport::new(
        "sin-theta-specialized",
        raw.lhs,
        3.0 * std::f64::consts::SQRT_2 * delta,
        Relation::AtMost,
        delta <= 0.5 && gap,
    )
    .with("delta", delta)
    .with("gap_premise", gap)
    .with("raw_rhs", finite_or_null(raw.rhs));
    Ok([raw.with("delta", delta), specialized])
}

/// `||M - M_hat||^2 <= 24 sigma_{r+1}^2 (1 + (m+n)/d)`, gated by the
/// spectral gap, the column budget and the entry budget.
pub fn check_full_rank_recovery(
    target: &Target,
    m_hat: &DenseMatrix,
    r: usize,
    d: usize,
    omega_len: usize,
    t: f64,
) -> Result<BoundReport> {
    check_rank(target, r)?;
    if m_hat.shape() != target.matrix.shape() {
        return Err(Error::invalid("estimate and target shapes differ"));
    }
    let gate = FullRankGate::new(target, r, d, t)?;
    let (n, m) = (target.nrows() as f64, target.ncols() as f64);
    let lhs = sq_norm(&(&target.matrix - m_hat))?;
    let rhs = 24.0 * target.sigma(r + 1).powi(2) * (1.0 + (m + n) / d as f64);
    let omega_ok = gate.omega_premise(omega_len);
    let except_omega = gate.gap_premise && gate.d_premise();
    Ok(BoundReport::new(
        "full-rank-recovery",
        lhs,
        rhs,
        Relation::AtMost,
        except_omega && omega_ok,
    )
    .with("r", r)
    .with("d", d)
    .with("omega", omega_len)
    .with("t", t)
    .with("lambda", gate.lambda)
    .with("mu_lambda", gate.mu_lambda)
    .with("numerical_rank", gate.numerical_rank)
    .with("gap_premise", gate.gap_premise)
    .with("d_premise", gate.d_premise())
    .with("omega_premise", omega_ok)
    .with("premises_met_except_omega", except_omega)
    .with("d_min", gate.d_min)
    .with("omega_min", gate.omega_min))
}

/// `mu(r) <= (2 r(M, lambda)/r) mu(lambda)` at `lambda = sigma_r^2/(mn)`.
pub fn check_incoherence_lemma(target: &Target, r: usize) -> Result<BoundReport> {
    check_rank(target, r)?;
    let lambda = target.lambda_for_rank(r);
    let premise = lambda > 0.0;
    let lhs = target.mu_r(r)?;
    let rhs = if premise {
        let nr = numerical_rank_from_svd(&target.svd, lambda)?;
        2.0 * nr.value / r as f64 * nr.mu_lambda
    } else {
        f64::INFINITY
    };
    Ok(
        BoundReport::new("incoherence-lemma", lhs, rhs, Relation::AtMost, premise)
            .with("r", r)
            .with("lambda", lambda),
    )
}
