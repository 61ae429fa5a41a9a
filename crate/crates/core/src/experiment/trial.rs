//! One seeded trial: instance, budgets, sampling, recovery and checks.

use std::sync::Arc;

use serde::Serialize;

use super::config::{Budget, CheckId, ExperimentConfig};
use crate::bounds::{
    build_h_pair, check_combine_run, check_delta, check_delta_triangle, check_full_rank_recovery,
    check_h_sandwich, check_halko, check_incoherence_lemma, check_mu_hat_bound,
    check_omega1_spectrum, check_projection, check_sin_theta_sampled, check_strong_convexity,
    sample_size_low_rank, BoundReport, FullRankGate, Side, Target,
};
use crate::error::{Error, Result};
use crate::io::read_matrix;
use crate::linalg::{spectral_norm, DenseMatrix, SvdFactors};
use crate::recovery::{
    assemble_design, build_bases, sample_inputs, solve_core, RecoveryResult, SampledInputs,
};
use crate::sampling::RngStream;
use crate::synth::{add_relative_noise, generate};

/// Where trial matrices come from.
#[derive(Debug, Clone)]
pub enum Source {
    Synth,
    File(Arc<DenseMatrix>),
}

impl Source {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        match &cfg.matrix {
            Some(path) => Ok(Source::File(Arc::new(read_matrix(path)?))),
            None => Ok(Source::Synth),
        }
    }
}

/// The target of one trial; `planted` is the generator's ground truth.
#[derive(Debug, Clone)]
pub struct Instance {
    pub matrix: DenseMatrix,
    pub planted: Option<SvdFactors>,
}

/// Generates (or copies) the matrix of trial `k`. Streams: child 0 drives
/// the generator, child 2 the noise.
pub fn build_instance(cfg: &ExperimentConfig, source: &Source, k: usize) -> Result<Instance> {
    match source {
        Source::File(m) => Ok(Instance {
            matrix: m.as_ref().clone(),
            planted: None,
        }),
        Source::Synth => {
            let stream = cfg.trial_stream(k);
            let (clean, truth) = generate(&cfg.synth.spec(cfg.r, stream.child(0)))?;
            let matrix = add_relative_noise(&clean, cfg.synth.noise, &stream.child(2))?;
            Ok(Instance {
                matrix,
                planted: Some(truth),
            })
        }
    }
}

/// Sample counts used by a trial and how they were obtained.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Budgets {
    pub d: usize,
    pub omega: usize,
    /// `"fixed"`, `"low-rank"` or `"full-rank"`.
    pub rule: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_min: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_min: Option<usize>,
    /// The formula asked for more than the matrix has.
    pub capped: bool,
}

fn low_rank_rule(cfg: &ExperimentConfig, source: &Source) -> bool {
    matches!(source, Source::File(_)) || cfg.synth.is_low_rank()
}

/// Resolves "auto" budgets from the measured incoherence of `target`.
/// `d` is capped at `min(n, m)` and `|Omega|` at `nm`.
pub fn resolve_budgets(
    cfg: &ExperimentConfig,
    source: &Source,
    n: usize,
    m: usize,
    target: Option<&Target>,
) -> Result<Budgets> {
    let (d_cap, omega_cap) = (n.min(m), n * m);
    if let (Budget::Count(d), Budget::Count(omega)) = (cfg.d, cfg.omega_count) {
        return Ok(Budgets {
            d,
            omega,
            rule: "fixed",
            mu: None,
            d_min: None,
            omega_min: None,
            capped: false,
        });
    }
    let target = target.ok_or_else(|| Error::invalid("auto budgets need the instance SVD"))?;
    let r = cfg.r;
    if low_rank_rule(cfg, source) {
        let mu = target.mu_r(r)?;
        let ss = sample_size_low_rank(mu, r, cfg.t)?;
        let d = match cfg.d {
            Budget::Count(d) => d,
            Budget::Auto => ss.d_min.min(d_cap),
        };
        let omega = match cfg.omega_count {
            Budget::Count(o) => o,
            Budget::Auto => ss.omega_min.min(omega_cap),
        };
        let capped = (cfg.d == Budget::Auto && ss.d_min > d_cap)
            || (cfg.omega_count == Budget::Auto && ss.omega_min > omega_cap);
        return Ok(Budgets {
            d: d.max(r),
            omega,
            rule: "low-rank",
            mu: Some(mu),
            d_min: Some(ss.d_min),
            omega_min: Some(ss.omega_min),
            capped,
        });
    }
    let d_min = FullRankGate::new(target, r, 1, cfg.t)?.d_min;
    let d = match cfg.d {
        Budget::Count(d) => d,
        Budget::Auto => d_min.min(d_cap).max(r),
    };
    let gate = FullRankGate::new(target, r, d, cfg.t)?;
    let omega = match cfg.omega_count {
        Budget::Count(o) => o,
        Budget::Auto => gate.omega_min.min(omega_cap),
    };
    let capped = (cfg.d == Budget::Auto && d_min > d_cap)
        || (cfg.omega_count == Budget::Auto && gate.omega_min > omega_cap);
    Ok(Budgets {
        d,
        omega,
        rule: "full-rank",
        mu: Some(gate.mu_lambda),
        d_min: Some(d_min),
        omega_min: Some(gate.omega_min),
        capped,
    })
}

/// Error of an estimate against the known target.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorMetrics {
    pub rel_frobenius: f64,
    /// `||M - M_hat||_2^2`.
    pub spectral_sq: f64,
    /// `sigma_{r+1}^2` of the target.
    pub sigma_r1_sq: f64,
    /// `24 sigma_{r+1}^2 (1 + (m+n)/d)`.
    pub full_rank_bound: f64,
    pub full_rank_bound_holds: bool,
}

pub fn rel_frobenius(m: &DenseMatrix, m_hat: &DenseMatrix) -> f64 {
    let err = (m - m_hat).norm();
    let scale = m.norm();
    if scale > 0.0 {
        err / scale
    } else {
        err
    }
}

pub fn error_metrics(
    target: &Target,
    m_hat: &DenseMatrix,
    r: usize,
    d: usize,
) -> Result<ErrorMetrics> {
    let spectral_sq = spectral_norm(&(&target.matrix - m_hat))?.powi(2);
    let sigma_r1_sq = target.sigma(r + 1).powi(2);
    let (n, m) = (target.nrows() as f64, target.ncols() as f64);
    let full_rank_bound = 24.0 * sigma_r1_sq * (1.0 + (m + n) / d as f64);
    let slack = crate::bounds::SLACK * full_rank_bound.max(1.0);
    Ok(ErrorMetrics {
        rel_frobenius: rel_frobenius(&target.matrix, m_hat),
        spectral_sq,
        sigma_r1_sq,
        full_rank_bound,
        full_rank_bound_holds: spectral_sq <= full_rank_bound + slack,
    })
}

/// Sampling and recovery on one instance. Recovery failures other than an
/// ill-posed solve abort; an ill-posed solve is returned in `solve`.
pub struct Run {
    pub sampled: SampledInputs,
    pub bases: crate::recovery::Bases,
    pub solve: Result<RecoveryResult>,
}

pub fn run_recovery(
    matrix: &DenseMatrix,
    d: usize,
    omega: usize,
    r: usize,
    ridge: f64,
    rng: &RngStream,
) -> Result<Run> {
    let sampled = sample_inputs(matrix, d, omega, r, rng)?;
    let bases = build_bases(&sampled.inputs.a, &sampled.inputs.b, r)?;
    let sys = assemble_design(&bases, &sampled.inputs.omega)?;
    let solve = match solve_core(&sys, ridge) {
        Ok(sol) => Ok(RecoveryResult {
            z_star: sol.z_star,
            bases: bases.clone(),
            lambda_min_ktk: sol.lambda_min_ktk,
            residual: sol.residual,
            regularizer_used: ridge,
            observations: sampled.inputs.omega.len(),
        }),
        Err(e @ Error::IllPosed { .. }) => Err(e),
        Err(e) => return Err(e),
    };
    Ok(Run {
        sampled,
        bases,
        solve,
    })
}

/// Runs the configured checkers in order.
pub fn run_checks(cfg: &ExperimentConfig, target: &Target, run: &Run) -> Result<Vec<BoundReport>> {
    let (r, t) = (cfg.r, cfg.t);
    let inputs = &run.sampled.inputs;
    let d = run.sampled.col_idx.len();
    let lambda = target.lambda_for_rank(r);
    let mut out = Vec::new();
    for &check in &cfg.checks {
        match check {
            CheckId::Halko => out.push(check_halko(target, &run.sampled.col_idx, r)?),
            CheckId::SinTheta => {
                let pair = build_h_pair(target, &inputs.a, Side::A, lambda)?;
                out.extend(check_sin_theta_sampled(target, &pair, r)?);
            }
            CheckId::Combine => {
                if let Ok(res) = &run.solve {
                    out.push(check_combine_run(target, res)?);
                }
            }
            CheckId::DeltaTriangle => out.push(check_delta_triangle(target, &run.bases)?),
            CheckId::Projection => out.extend(check_projection(target, &run.bases, r, d, t)?),
            CheckId::Delta => out.push(check_delta(target, &run.bases, r, d, t)?),
            CheckId::Omega1Spectrum => {
                out.push(check_omega1_spectrum(target, &run.sampled.col_idx, r, t)?)
            }
            CheckId::StrongConvexity => {
                let sys = assemble_design(&run.bases, &inputs.omega)?;
                out.push(check_strong_convexity(&sys, t)?);
            }
            CheckId::HSandwich => {
                let a = build_h_pair(target, &inputs.a, Side::A, lambda)?;
                let b = build_h_pair(target, &inputs.b, Side::B, lambda)?;
                out.push(check_h_sandwich(target, &a, cfg.delta, t)?);
                out.push(check_h_sandwich(target, &b, cfg.delta, t)?);
            }
            CheckId::MuHat => out.push(check_mu_hat_bound(target, &run.bases, r, d, t)?),
            CheckId::FullRankRecovery => {
                if let Ok(res) = &run.solve {
                    let omega = inputs.omega.len();
                    out.push(check_full_rank_recovery(
                        target,
                        &res.m_hat(),
                        r,
                        d,
                        omega,
                        t,
                    )?);
                }
            }
            CheckId::IncoherenceLemma => out.push(check_incoherence_lemma(target, r)?),
        }
    }
    Ok(out)
}

/// Runs `f` over `0..trials` on a pool capped by `CURLOW_THREADS`; results
/// keep trial order.
pub fn map_trials<T, F>(trials: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    use rayon::prelude::*;
    let threads = match std::env::var("CURLOW_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::invalid(format!("CURLOW_THREADS must be a count, got {v:?}")))?,
        Err(_) => 0,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start thread pool: {e}")))?;
    pool.install(|| (0..trials).into_par_iter().map(&f).collect())
}
