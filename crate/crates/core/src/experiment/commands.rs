use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use serde::Serialize;

use super::config::{Budget, ExperimentConfig};
use super::trial::{
    build_instance, error_metrics, map_trials, rel_frobenius, resolve_budgets, run_checks,
    run_recovery, Budgets, ErrorMetrics, Source,
};
use crate::bounds::{summarize, total_observations, BoundReport, HoldsSummary, Target};
use crate::cur::{cur_decompose, cur_error_ratio, CurReport};
use crate::error::{Error, Result};
use crate::io::{write_index_set, write_json, write_matrix, write_omega, write_text, MatrixFormat};
use crate::linalg::{svd, DenseMatrix};
use crate::recovery::{RecoveryReport, SampledInputs};
use crate::synth::{measured_properties_from_svd, MeasuredProperties};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
}

impl ReportFormat {
    fn matrix_format(self) -> MatrixFormat {
        match self {
            ReportFormat::Json => MatrixFormat::DenseArray,
            ReportFormat::Csv => MatrixFormat::Csv,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: PathBuf,
    pub format: ReportFormat,
}

impl RunOptions {
    pub fn new(out: impl Into<PathBuf>, format: ReportFormat) -> Self {
        RunOptions {
            out: out.into(),
            format,
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn prepare(&self) -> Result<()> {
        fs::create_dir_all(&self.out).map_err(|e| Error::io(&self.out, e))
    }
}

/// Files written by a command, in write order.
pub type Written = Vec<PathBuf>;

fn emit_json<T: Serialize>(
    opts: &RunOptions,
    name: &str,
    value: &T,
    written: &mut Written,
) -> Result<()> {
    let p = opts.path(name);
    write_json(value, &p)?;
    written.push(p);
    Ok(())
}

fn emit_text(opts: &RunOptions, name: &str, text: &str, written: &mut Written) -> Result<()> {
    let p = opts.path(name);
    write_text(&p, text)?;
    written.push(p);
    Ok(())
}

fn matrix_name(stem: &str, opts: &RunOptions) -> String {
    format!("{stem}.{}", opts.format.matrix_format().extension())
}

fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

#[derive(Serialize)]
struct GenReport<'a> {
    config: &'a ExperimentConfig,
    n: usize,
    m: usize,
    properties: MeasuredProperties,
    budgets: Budgets,
}

#[derive(Serialize)]
struct SpectrumReport<'a> {
    config: &'a ExperimentConfig,
    planted: Option<Vec<f64>>,
    measured: Vec<f64>,
}

/// Writes the trial-0 matrix, its spectrum and its measured properties.
pub fn cmd_gen(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Written> {
    opts.prepare()?;
    let source = Source::from_config(cfg)?;
    let inst = build_instance(cfg, &source, 0)?;
    let target = Target::new(inst.matrix.clone())?;
    let (n, m) = inst.matrix.shape();
    if cfg.r > n.min(m) {
        return Err(Error::invalid(format!(
            "r = {} exceeds min(n, m) = {}",
            cfg.r,
            n.min(m)
        )));
    }
    let lambda = target.lambda_for_rank(cfg.r);
    let properties = measured_properties_from_svd(&target.svd, cfg.r, lambda)?;
    let budgets = resolve_budgets(cfg, &source, n, m, Some(&target))?;
    let mut written = Vec::new();
    let name = matrix_name("matrix", opts);
    write_matrix(&inst.matrix, &opts.path(&name), opts.format.matrix_format())?;
    written.push(opts.path(&name));
    let spectrum = SpectrumReport {
        config: cfg,
        planted: inst
            .planted
            .as_ref()
            .map(|f| f.sigma.iter().copied().collect()),
        measured: target.svd.sigma.iter().copied().collect(),
    };
    emit_json(opts, "spectrum.json", &spectrum, &mut written)?;
    let report = GenReport {
        config: cfg,
        n,
        m,
        properties,
        budgets,
    };
    emit_json(opts, "properties.json", &report, &mut written)?;
    Ok(written)
}

#[derive(Debug, Clone, Serialize)]
pub struct RecoverOutput {
    pub config: ExperimentConfig,
    pub budgets: Budgets,
    pub recovery: RecoveryReport,
    #[serde(rename = "lambda_min_KtK_over_omega")]
    pub gamma: f64,
    pub metrics: ErrorMetrics,
}

/// Samples trial 0, recovers it and reports the error metrics.
pub fn cmd_recover(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Written> {
    opts.prepare()?;
    let (output, sampled, m_hat) = recover_trial(cfg)?;
    let mut written = Vec::new();
    if cfg.save_m_hat {
        let name = matrix_name("m_hat", opts);
        write_matrix(&m_hat, &opts.path(&name), opts.format.matrix_format())?;
        written.push(opts.path(&name));
    }
    if cfg.save_samples {
        for (name, set) in [
            ("cols.txt", &sampled.col_idx),
            ("rows.txt", &sampled.row_idx),
        ] {
            write_index_set(set, &opts.path(name))?;
            written.push(opts.path(name));
        }
        write_omega(&sampled.inputs.omega, &opts.path("omega.csv"))?;
        written.push(opts.path("omega.csv"));
    }
    emit_json(opts, "recovery.json", &output, &mut written)?;
    Ok(written)
}

/// The computation behind `recover`, exposed for tests.
pub fn recover_trial(
    cfg: &ExperimentConfig,
) -> Result<(RecoverOutput, SampledInputs, DenseMatrix)> {
    let source = Source::from_config(cfg)?;
    let inst = build_instance(cfg, &source, 0)?;
    let (n, m) = inst.matrix.shape();
    let target = Target::new(inst.matrix)?;
    let budgets = resolve_budgets(cfg, &source, n, m, Some(&target))?;
    let run = run_recovery(
        &target.matrix,
        budgets.d,
        budgets.omega,
        cfg.r,
        cfg.ridge,
        &cfg.trial_stream(0).child(1),
    )?;
    let result = run.solve?;
    let m_hat = result.m_hat();
    let metrics = error_metrics(&target, &m_hat, cfg.r, budgets.d)?;
    let output = RecoverOutput {
        config: cfg.clone(),
        budgets,
        recovery: result.report(),
        gamma: result.gamma(),
        metrics,
    };
    Ok((output, run.sampled, m_hat))
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub budgets: Budgets,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<ErrorMetrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub reports: Vec<BoundReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyOutput {
    pub config: ExperimentConfig,
    pub trials: Vec<TrialRecord>,
    pub summary: Vec<HoldsSummary>,
}

/// Runs the configured checks on every trial.
pub fn verify_trials(cfg: &ExperimentConfig) -> Result<VerifyOutput> {
    let source = Source::from_config(cfg)?;
    let trials = map_trials(cfg.trials, |k| {
        let inst = build_instance(cfg, &source, k)?;
        let (n, m) = inst.matrix.shape();
        let target = Target::new(inst.matrix)?;
        let budgets = resolve_budgets(cfg, &source, n, m, Some(&target))?;
        let run = run_recovery(
            &target.matrix,
            budgets.d,
            budgets.omega,
            cfg.r,
            cfg.ridge,
            &cfg.trial_stream(k).child(1),
        )?;
        let reports = run_checks(cfg, &target, &run)?;
        let (metrics, error) = match &run.solve {
            Ok(res) => (
                Some(error_metrics(&target, &res.m_hat(), cfg.r, budgets.d)?),
                None,
            ),
            Err(e) => (None, Some(e.to_string())),
        };
        Ok(TrialRecord {
            trial: k,
            budgets,
            metrics,
            error,
            reports,
        })
    })?;
    let all: Vec<BoundReport> = trials
        .iter()
        .flat_map(|t| t.reports.iter().cloned())
        .collect();
    Ok(VerifyOutput {
        config: cfg.clone(),
        summary: summarize(&all),
        trials,
    })
}

pub fn cmd_verify(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Written> {
    opts.prepare()?;
    let out = verify_trials(cfg)?;
    let mut written = Vec::new();
    match opts.format {
        ReportFormat::Json => emit_json(opts, "verify.json", &out, &mut written)?,
        ReportFormat::Csv => {
            emit_json(opts, "config.json", &out.config, &mut written)?;
            let mut t = String::from("trial,check,lhs,rhs,relation,holds,premises_met\n");
            for rec in &out.trials {
                for rep in &rec.reports {
                    let rel = serde_json::to_value(rep.relation).unwrap_or_default();
                    writeln!(
                        t,
                        "{},{},{},{},{},{},{}",
                        rec.trial,
                        rep.name,
                        fmt_num(rep.lhs),
                        fmt_num(rep.rhs),
                        rel.as_str().unwrap_or_default(),
                        rep.holds,
                        rep.premises_met
                    )
                    .unwrap();
                }
            }
            emit_text(opts, "verify_trials.csv", &t, &mut written)?;
            let mut s = String::from(
                "check,trials,premise_trials,holds,holds_with_premises,rate,rate_all\n",
            );
            for h in &out.summary {
                writeln!(
                    s,
                    "{},{},{},{},{},{},{}",
                    h.name,
                    h.trials,
                    h.premise_trials,
                    h.holds,
                    h.holds_with_premises,
                    fmt_opt(h.rate),
                    fmt_num(h.rate_all)
                )
                .unwrap();
            }
            emit_text(opts, "verify_summary.csv", &s, &mut written)?;
        }
    }
    Ok(written)
}

/// One grid point of a sample-budget sweep, averaged over trials.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub d: usize,
    pub omega: usize,
    /// `d n + d m + |Omega|`: entries actually observed.
    pub total_observations: usize,
    /// `d n + n^2 / d^2` with `n = max(n, m)`.
    pub analytic_total: f64,
    pub trials: usize,
    /// Trials whose core solve was ill-posed.
    pub failures: usize,
    pub mean_rel_error: Option<f64>,
    pub max_rel_error: Option<f64>,
    /// Per configured check, the fraction of reports that held.
    pub holds: Vec<(String, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepOutput {
    pub config: ExperimentConfig,
    pub n: usize,
    pub m: usize,
    pub rows: Vec<SweepRow>,
}

fn sweep_points(cfg: &ExperimentConfig, n: usize, m: usize) -> Result<Vec<(usize, Option<usize>)>> {
    let grid = &cfg.sweep;
    if !grid.d_grid.is_empty() && !grid.omega_grid.is_empty() {
        return Err(Error::invalid(
            "set only one of sweep.d_grid and sweep.omega_grid",
        ));
    }
    if !grid.d_grid.is_empty() {
        return Ok(grid
            .d_grid
            .iter()
            .map(|&d| {
                let omega = match cfg.omega_count {
                    Budget::Count(o) => o,
                    Budget::Auto => ((n * m) as f64 / (d * d) as f64).ceil() as usize,
                };
                (d, Some(omega.min(n * m)))
            })
            .collect());
    }
    if !grid.omega_grid.is_empty() {
        return Ok(grid.omega_grid.iter().map(|&o| (o, None)).collect());
    }
    Err(Error::invalid(
        "sweep needs sweep.d_grid or sweep.omega_grid",
    ))
}

struct PointResult {
    rel_error: Option<f64>,
    reports: Vec<BoundReport>,
}

/// Sweeps `d` (or `|Omega|`) over the configured grid. Each trial draws one
/// matrix shared by all grid points.
pub fn sweep_table(cfg: &ExperimentConfig) -> Result<SweepOutput> {
    let source = Source::from_config(cfg)?;
    let (n, m) = match &source {
        Source::File(mat) => mat.shape(),
        Source::Synth => (cfg.synth.n, cfg.synth.m),
    };
    let points = sweep_points(cfg, n, m)?;
    let omega_sweep = cfg.sweep.d_grid.is_empty();
    let need_target = !cfg.checks.is_empty() || (omega_sweep && cfg.d == Budget::Auto);
    let per_trial = map_trials(cfg.trials, |k| {
        let inst = build_instance(cfg, &source, k)?;
        let target = if need_target {
            Some(Target::new(inst.matrix.clone())?)
        } else {
            None
        };
        let mut out = Vec::with_capacity(points.len());
        for (p, &(a, b)) in points.iter().enumerate() {
            let (d, omega) = match b {
                Some(omega) => (a, omega),
                None => {
                    let d = match cfg.d {
                        Budget::Count(d) => d,
                        Budget::Auto => resolve_budgets(cfg, &source, n, m, target.as_ref())?.d,
                    };
                    (d, a)
                }
            };
            let run = run_recovery(
                &inst.matrix,
                d,
                omega,
                cfg.r,
                cfg.ridge,
                &cfg.trial_stream(k).child(3).child(p as u64),
            )?;
            let reports = match &target {
                Some(t) => run_checks(cfg, t, &run)?,
                None => Vec::new(),
            };
            let rel_error = run
                .solve
                .as_ref()
                .ok()
                .map(|res| rel_frobenius(&inst.matrix, &res.m_hat()));
            out.push((d, omega, PointResult { rel_error, reports }));
        }
        Ok(out)
    })?;
    let mut rows = Vec::with_capacity(points.len());
    for p in 0..points.len() {
        let (d, omega, _) = per_trial[0][p];
        let results: Vec<&PointResult> = per_trial.iter().map(|t| &t[p].2).collect();
        let errors: Vec<f64> = results.iter().filter_map(|r| r.rel_error).collect();
        let reports: Vec<BoundReport> = results
            .iter()
            .flat_map(|r| r.reports.iter().cloned())
            .collect();
        let holds = summarize(&reports)
            .into_iter()
            .map(|s| (s.name, s.rate_all))
            .collect();
        rows.push(SweepRow {
            d,
            omega,
            total_observations: d * n + d * m + omega,
            analytic_total: total_observations(n.max(m), d),
            trials: results.len(),
            failures: results.len() - errors.len(),
            mean_rel_error: (!errors.is_empty())
                .then(|| errors.iter().sum::<f64>() / errors.len() as f64),
            max_rel_error: errors.iter().copied().reduce(f64::max),
            holds,
        });
    }
    Ok(SweepOutput {
        config: cfg.clone(),
        n,
        m,
        rows,
    })
}

pub fn sweep_csv(out: &SweepOutput) -> String {
    let names: Vec<&str> = out
        .rows
        .iter()
        .flat_map(|r| r.holds.iter().map(|(n, _)| n.as_str()))
        .fold(Vec::new(), |mut acc, n| {
            if !acc.contains(&n) {
                acc.push(n);
            }
            acc
        });
    let mut s = String::from(
        "d,omega,total_observations,analytic_total,trials,failures,mean_rel_error,max_rel_error",
    );
    for n in &names {
        write!(s, ",holds_{n}").unwrap();
    }
    s.push('\n');
    for r in &out.rows {
        write!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.d,
            r.omega,
            r.total_observations,
            fmt_num(r.analytic_total),
            r.trials,
            r.failures,
            fmt_opt(r.mean_rel_error),
            fmt_opt(r.max_rel_error)
        )
        .unwrap();
        for n in &names {
            let v = r.holds.iter().find(|(k, _)| k == n).map(|(_, v)| *v);
            write!(s, ",{}", fmt_opt(v)).unwrap();
        }
        s.push('\n');
    }
    s
}

pub fn cmd_sweep(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Written> {
    opts.prepare()?;
    let out = sweep_table(cfg)?;
    let mut written = Vec::new();
    emit_text(opts, "sweep.csv", &sweep_csv(&out), &mut written)?;
    match opts.format {
        ReportFormat::Json => emit_json(opts, "sweep.json", &out, &mut written)?,
        ReportFormat::Csv => emit_json(opts, "config.json", &out.config, &mut written)?,
    }
    Ok(written)
}

#[derive(Debug, Clone, Serialize)]
pub struct CurTrial {
    pub trial: usize,
    pub k: usize,
    pub report: CurReport,
    pub rel_frobenius: f64,
    /// The sampled columns and rows each have the rank of `M`.
    pub span_verified: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CurOutput {
    pub config: ExperimentConfig,
    pub trials: Vec<CurTrial>,
    pub exact: usize,
    pub infinite: usize,
    pub max_ratio: Option<f64>,
}

fn cur_sizes(cfg: &ExperimentConfig) -> Result<(usize, usize, usize)> {
    let c = match (cfg.cur.c, cfg.d) {
        (Some(c), _) => c,
        (None, Budget::Count(d)) => d,
        (None, Budget::Auto) => return Err(Error::invalid("cur needs cur.c or a numeric d")),
    };
    Ok((c, cfg.cur.r_rows.unwrap_or(c), cfg.cur.k.unwrap_or(cfg.r)))
}

pub fn cur_trials(cfg: &ExperimentConfig) -> Result<CurOutput> {
    let source = Source::from_config(cfg)?;
    let (c, r_rows, k) = cur_sizes(cfg)?;
    let trials = map_trials(cfg.trials, |t| {
        let inst = build_instance(cfg, &source, t)?;
        let m = &inst.matrix;
        let factors = cur_decompose(m, c, r_rows, &cfg.trial_stream(t).child(1))?;
        let ratio = cur_error_ratio(m, &factors, k)?;
        let rank = svd(m)?.rank();
        let span_verified = svd(&factors.c)?.rank() == rank && svd(&factors.r)?.rank() == rank;
        Ok(CurTrial {
            trial: t,
            k,
            rel_frobenius: rel_frobenius(m, &factors.reconstruct()),
            report: CurReport::new(&factors, ratio),
            span_verified,
        })
    })?;
    let exact = trials
        .iter()
        .filter(|t| t.report.exact == Some(true))
        .count();
    let infinite = trials
        .iter()
        .filter(|t| t.report.infinite == Some(true))
        .count();
    let max_ratio = trials
        .iter()
        .filter_map(|t| t.report.error_ratio)
        .reduce(f64::max);
    Ok(CurOutput {
        config: cfg.clone(),
        trials,
        exact,
        infinite,
        max_ratio,
    })
}

pub fn cmd_cur(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Written> {
    opts.prepare()?;
    let out = cur_trials(cfg)?;
    let mut written = Vec::new();
    match opts.format {
        ReportFormat::Json => emit_json(opts, "cur.json", &out, &mut written)?,
        ReportFormat::Csv => {
            emit_json(opts, "config.json", &out.config, &mut written)?;
            let mut s = String::from(
                "trial,c,r_rows,k,error_ratio,exact,infinite,rel_frobenius,span_verified\n",
            );
            for t in &out.trials {
                writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{}",
                    t.trial,
                    t.report.c,
                    t.report.r_rows,
                    t.k,
                    fmt_opt(t.report.error_ratio),
                    t.report.exact.unwrap_or(false),
                    t.report.infinite.unwrap_or(false),
                    fmt_num(t.rel_frobenius),
                    t.span_verified
                )
                .unwrap();
            }
            emit_text(opts, "cur.csv", &s, &mut written)?;
        }
    }
    Ok(written)
}
