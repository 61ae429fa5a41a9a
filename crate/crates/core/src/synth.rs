//! Seeded test matrices with a planted spectrum and controlled coherence.

use std::f64::consts::PI;

use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::coherence::{mu_r_from_svd, numerical_rank_from_svd};
use crate::error::{Error, Result};
use crate::linalg::{normalize_signs, svd, DenseMatrix, SvdFactors};
use crate::sampling::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SpectrumKind {
    /// Rank `r`, singular values log-uniform in `[1, 10]`.
    ExactLowRank { r: usize },
    /// Full rank, `sigma_i = decay^i`.
    Geometric { decay: f64 },
    /// Full rank, `sigma_i = (i + 1)^-exponent`.
    PowerLaw { exponent: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "coherence", rename_all = "kebab-case")]
pub enum CoherenceKind {
    /// Orthonormalized Rademacher factors.
    Flat,
    /// Flat factors whose first left singular vector carries `weight` on
    /// row `index`.
    Spiky { index: usize, weight: f64 },
    /// Real Fourier columns at random distinct frequencies with rows
    /// permuted; every row of an odd-width factor has the same norm.
    Minimal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthSpec {
    pub n: usize,
    pub m: usize,
    #[serde(flatten)]
    pub kind: SpectrumKind,
    #[serde(flatten)]
    pub coherence: CoherenceKind,
    pub seed: RngStream,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(Error::invalid(format!(
                "matrix dimensions must be positive, got {}x{}",
                self.n, self.m
            )));
        }
        match self.kind {
            SpectrumKind::ExactLowRank { r } => {
                if r == 0 || r > self.n.min(self.m) {
                    return Err(Error::invalid(format!(
                        "planted rank {r} is outside 1..={}",
                        self.n.min(self.m)
                    )));
                }
            }
            SpectrumKind::Geometric { decay } => {
                if !(decay > 0.0 && decay < 1.0) {
                    return Err(Error::invalid(format!(
                        "decay must lie in (0, 1), got {decay}"
                    )));
                }
            }
            SpectrumKind::PowerLaw { exponent } => {
                if !(exponent > 0.0 && exponent.is_finite()) {
                    return Err(Error::invalid(format!(
                        "exponent must be positive, got {exponent}"
                    )));
                }
            }
        }
        if let CoherenceKind::Spiky { index, weight } = self.coherence {
            if index >= self.n {
                return Err(Error::invalid(format!(
                    "spike row {index} is outside 0..{}",
                    self.n
                )));
            }
            if !(0.0..=1.0).contains(&weight) {
                return Err(Error::invalid(format!(
                    "spike weight must lie in [0, 1], got {weight}"
                )));
            }
        }
        Ok(())
    }

    /// Number of planted singular directions.
    pub fn width(&self) -> usize {
        match self.kind {
            SpectrumKind::ExactLowRank { r } => r,
            _ => self.n.min(self.m),
        }
    }
}

fn spectrum(spec: &SynthSpec, rng: &RngStream) -> DVector<f64> {
    let k = spec.width();
    match spec.kind {
        SpectrumKind::ExactLowRank { .. } => {
            let mut g = rng.rng();
            let mut s: Vec<f64> = (0..k)
                .map(|_| (g.random::<f64>() * 10f64.ln()).exp())
                .collect();
            s.sort_by(|a, b| b.total_cmp(a));
            DVector::from_vec(s)
        }
        SpectrumKind::Geometric { decay } => DVector::from_fn(k, |i, _| decay.powi(i as i32)),
        SpectrumKind::PowerLaw { exponent } => {
            DVector::from_fn(k, |i, _| ((i + 1) as f64).powf(-exponent))
        }
    }
}

fn rademacher(rows: usize, cols: usize, rng: &RngStream) -> DenseMatrix {
    let mut g = rng.rng();
    DenseMatrix::from_fn(
        rows,
        cols,
        |_, _| if g.random::<bool>() { 1.0 } else { -1.0 },
    )
}

fn flat_factor(rows: usize, k: usize, rng: &RngStream) -> DenseMatrix {
    rademacher(rows, k, rng).qr().q()
}

/// Orthonormal `rows x k` factor whose first column has `weight` on `index`.
fn spiky_factor(rows: usize, k: usize, index: usize, weight: f64, rng: &RngStream) -> DenseMatrix {
    let mut raw = rademacher(rows, k, rng);
    let mut g = raw.column(0).into_owned();
    g[index] = 0.0;
    let g = if g.norm() > 0.0 {
        g.normalize()
    } else {
        DVector::zeros(rows)
    };
    let mut first = g * (1.0 - weight * weight).max(0.0).sqrt();
    first[index] = weight;
    raw.set_column(0, &first);
    raw.qr().q()
}

/// Real Fourier basis: constant column, then (cos, sin) pairs at distinct
/// random frequencies, then the alternating column for even `rows`.
fn minimal_factor(rows: usize, k: usize, rotate: bool, rng: &RngStream) -> DenseMatrix {
    let mut g = rng.rng();
    let nf = rows as f64;
    let mut freqs: Vec<usize> = (1..=(rows - 1) / 2).collect();
    freqs.shuffle(&mut g);
    let mut columns: Vec<DVector<f64>> = vec![DVector::from_element(rows, 1.0 / nf.sqrt())];
    let scale = (2.0 / nf).sqrt();
    for f in freqs {
        let w = 2.0 * PI * f as f64 / nf;
        columns.push(DVector::from_fn(rows, |i, _| scale * (w * i as f64).cos()));
        columns.push(DVector::from_fn(rows, |i, _| scale * (w * i as f64).sin()));
    }
    if rows.is_multiple_of(2) {
        columns.push(DVector::from_fn(rows, |i, _| {
            if i % 2 == 0 {
                1.0 / nf.sqrt()
            } else {
                -1.0 / nf.sqrt()
            }
        }));
    }
    columns.truncate(k);
    let mut perm: Vec<usize> = (0..rows).collect();
    perm.shuffle(&mut g);
    let mut q = DenseMatrix::from_fn(rows, k, |i, j| columns[j][perm[i]]);
    for j in 0..k {
        if g.random::<bool>() {
            q.column_mut(j).neg_mut();
        }
    }
    if rotate {
        let rot = rademacher(k, k, &rng.child(0)).qr().q();
        q *= rot;
    }
    q
}

/// Builds `M = U0 diag(sigma) V0^T` and returns it with its planted SVD.
pub fn generate(spec: &SynthSpec) -> Result<(DenseMatrix, SvdFactors)> {
    spec.validate()?;
    let k = spec.width();
    let sigma = spectrum(spec, &spec.seed.child(0));
    let rotate = matches!(spec.kind, SpectrumKind::ExactLowRank { .. });
    let (u_rng, v_rng) = (spec.seed.child(1), spec.seed.child(2));
    let (mut u, v) = match spec.coherence {
        CoherenceKind::Flat => (
            flat_factor(spec.n, k, &u_rng),
            flat_factor(spec.m, k, &v_rng),
        ),
        CoherenceKind::Spiky { index, weight } => (
            spiky_factor(spec.n, k, index, weight, &u_rng),
            flat_factor(spec.m, k, &v_rng),
        ),
        CoherenceKind::Minimal => (
            minimal_factor(spec.n, k, rotate, &u_rng),
            minimal_factor(spec.m, k, rotate, &v_rng),
        ),
    };
    let mut v = v;
    for (j, flipped) in normalize_signs(&mut u).into_iter().enumerate() {
        if flipped {
            v.column_mut(j).neg_mut();
        }
    }
    let truth = SvdFactors { u, sigma, v };
    Ok((truth.reconstruct(), truth))
}

/// Adds Gaussian noise scaled to Frobenius norm `level * ||m||_F`.
pub fn add_relative_noise(m: &DenseMatrix, level: f64, rng: &RngStream) -> Result<DenseMatrix> {
    if !(level >= 0.0 && level.is_finite()) {
        return Err(Error::invalid(format!(
            "noise level must be nonnegative, got {level}"
        )));
    }
    if level == 0.0 {
        return Ok(m.clone());
    }
    let mut g = rng.rng();
    let e = DenseMatrix::from_fn(m.nrows(), m.ncols(), |_, _| {
        g.sample::<f64, _>(StandardNormal)
    });
    let scale = level * m.norm() / e.norm();
    Ok(m + e * scale)
}

/// Coherence, numerical rank and spectral gap of an instance at rank `r`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasuredProperties {
    pub r: usize,
    pub lambda: f64,
    pub mu_r: f64,
    pub mu_lambda: f64,
    pub numerical_rank: f64,
    /// `sigma_r / sigma_{r+1}`; infinite when `sigma_{r+1} = 0`.
    pub gap: f64,
    /// `sigma_r >= sqrt(2) sigma_{r+1}`.
    pub gap_premise: bool,
}

pub fn measured_properties_from_svd(
    f: &SvdFactors,
    r: usize,
    lambda: f64,
) -> Result<MeasuredProperties> {
    let mu = mu_r_from_svd(f, r)?;
    let nr = numerical_rank_from_svd(f, lambda)?;
    let (s_r, s_next) = (f.sigma_at(r - 1), f.sigma_at(r));
    let gap = if s_next > f.zero_threshold() {
        s_r / s_next
    } else {
        f64::INFINITY
    };
    Ok(MeasuredProperties {
        r,
        lambda,
        mu_r: mu.mu,
        mu_lambda: nr.mu_lambda,
        numerical_rank: nr.value,
        gap,
        gap_premise: s_r >= std::f64::consts::SQRT_2 * s_next,
    })
}

pub fn measured_properties(m: &DenseMatrix, r: usize, lambda: f64) -> Result<MeasuredProperties> {
    measured_properties_from_svd(&svd(m)?, r, lambda)
}
