//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs with `cargo test --test acceptance`; exits nonzero if any criterion
//! fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use curlow::bounds::{
    build_h_pair, check_combine_run, check_delta_triangle, check_halko, check_sin_theta_sampled,
    BoundReport, Relation, Side, Target,
};
use curlow::experiment::trial::{
    build_instance, rel_frobenius, resolve_budgets, run_recovery, Source,
};
use curlow::experiment::{
    cur_trials, sweep_table, verify_trials, Budget, CheckId, CoherenceChoice, ExperimentConfig,
    SynthConfig, SynthKind,
};
use curlow::linalg::{pseudo_inverse, DenseMatrix, PINV_DEFAULT_TOL};
use curlow::recovery::{assemble_design, build_bases, sample_inputs, solve_core};
use curlow::sampling::{sample_columns, RngStream};
use curlow::synth::{add_relative_noise, generate, CoherenceKind, SpectrumKind, SynthSpec};
use curlow::Error;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn synth_config(kind: SynthKind, n: usize, m: usize, coherence: CoherenceChoice) -> SynthConfig {
    SynthConfig {
        kind,
        n,
        m,
        coherence,
        ..SynthConfig::default()
    }
}

/// `lhs <= rhs (1 + 1e-9)`, or the mirrored form for lower bounds.
fn strict_holds(rep: &BoundReport) -> bool {
    match rep.relation {
        Relation::AtMost => rep.lhs <= rep.rhs + 1e-9 * rep.rhs.abs(),
        Relation::AtLeast => rep.lhs >= rep.rhs - 1e-9 * rep.rhs.abs(),
    }
}

fn perfect_recovery() -> Outcome {
    let cfg = ExperimentConfig {
        synth: synth_config(SynthKind::ExactLowRank, 200, 200, CoherenceChoice::Minimal),
        r: 5,
        t: 3.0,
        d: Budget::Auto,
        omega_count: Budget::Auto,
        seed: 1,
        ..Default::default()
    };
    let source = Source::Synth;
    let (mut exact, mut slowest, mut capped) = (0, Duration::ZERO, 0);
    let mut budgets = None;
    for k in 0..20 {
        let start = Instant::now();
        let inst = build_instance(&cfg, &source, k).unwrap();
        let target = Target::new(inst.matrix).unwrap();
        let b = resolve_budgets(&cfg, &source, 200, 200, Some(&target)).unwrap();
        let run = run_recovery(
            &target.matrix,
            b.d,
            b.omega,
            cfg.r,
            0.0,
            &cfg.trial_stream(k).child(1),
        )
        .unwrap();
        let err = run
            .solve
            .map(|res| rel_frobenius(&target.matrix, &res.m_hat()))
            .unwrap_or(f64::INFINITY);
        slowest = slowest.max(start.elapsed());
        exact += (err <= 1e-6) as usize;
        capped += b.capped as usize;
        budgets.get_or_insert((b.d, b.omega, b.mu.unwrap_or(f64::NAN)));
    }
    let (d, omega, mu) = budgets.unwrap();
    outcome(
        exact >= 18 && slowest < Duration::from_secs(5) && capped == 0,
        format!(
            "{exact}/20 trials with rel. error <= 1e-6 (need 18); slowest trial {:.2}s (limit 5s); \
             n=m=200 r=5 mu={mu:.3} d={d} |Omega|={omega}; capped budgets {capped}",
            slowest.as_secs_f64()
        ),
    )
}

fn random_matrix(n: usize, m: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    DenseMatrix::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0))
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut done, mut worst, mut worst_scalar, mut skipped, mut r1) = (0, 0.0f64, 0.0f64, 0, 0);
    let mut attempt = 0u64;
    while done < 30 {
        attempt += 1;
        let r = 1 + done % 3;
        let n = rng.random_range(r + 1..=12);
        let m = rng.random_range(r + 1..=12);
        let d = rng.random_range(r..=n.min(m));
        let omega_len = rng.random_range(r * r + 2..=n * m);
        let mat = random_matrix(n, m, &mut rng);
        let s = sample_inputs(&mat, d, omega_len, r, &RngStream::new(2, attempt)).unwrap();
        let bases = build_bases(&s.inputs.a, &s.inputs.b, r).unwrap();
        let sys = assemble_design(&bases, &s.inputs.omega).unwrap();
        let sol = match solve_core(&sys, 0.0) {
            Ok(sol) => sol,
            Err(Error::IllPosed { .. }) => {
                skipped += 1;
                continue;
            }
            Err(e) => panic!("{e}"),
        };
        // K and y assembled here from U_hat, V_hat and Omega directly.
        let (u, v) = (&bases.u_hat, &bases.v_hat);
        let pairs = s.inputs.omega.pairs();
        let k = DenseMatrix::from_fn(pairs.len(), r * r, |t, c| {
            let (a, b) = pairs[t];
            u[(a, c / r)] * v[(b, c % r)]
        });
        let y = DenseMatrix::from_column_slice(pairs.len(), 1, s.inputs.omega.values());
        let z = pseudo_inverse(&k, PINV_DEFAULT_TOL).unwrap() * &y;
        for c in 0..r * r {
            worst = worst.max((sol.z_star[(c / r, c % r)] - z[(c, 0)]).abs());
        }
        if r == 1 {
            let (num, den) = (0..pairs.len()).fold((0.0, 0.0), |(num, den), t| {
                (num + k[(t, 0)] * y[(t, 0)], den + k[(t, 0)] * k[(t, 0)])
            });
            worst_scalar = worst_scalar.max((sol.z_star[(0, 0)] - num / den).abs());
            r1 += 1;
        }
        done += 1;
    }
    outcome(
        worst <= 1e-8 && worst_scalar <= 1e-12 && r1 > 0,
        format!(
            "30 instances ({skipped} ill-posed draws redrawn); max |Z* - pinv(K) y| = {worst:.2e} (tol 1e-8); \
             r=1 closed form max diff {worst_scalar:.2e} over {r1} instances (tol 1e-12)"
        ),
    )
}

fn random_full_rank(n: usize, m: usize, rng: &mut ChaCha8Rng, seed: u64) -> DenseMatrix {
    let kind = match rng.random_range(0..3) {
        0 => SpectrumKind::Geometric {
            decay: rng.random_range(0.2..0.9),
        },
        1 => SpectrumKind::PowerLaw {
            exponent: rng.random_range(0.5..3.0),
        },
        _ => SpectrumKind::ExactLowRank {
            r: rng.random_range(1..=n.min(m)),
        },
    };
    let coherence = match rng.random_range(0..3) {
        0 => CoherenceKind::Flat,
        1 => CoherenceKind::Minimal,
        _ => CoherenceKind::Spiky {
            index: rng.random_range(0..n),
            weight: rng.random_range(0.0..1.0),
        },
    };
    let spec = SynthSpec {
        n,
        m,
        kind,
        coherence,
        seed: RngStream::new(seed, 3),
    };
    let (clean, _) = generate(&spec).unwrap();
    // Noise keeps every instance full rank so that no bound is exactly zero.
    add_relative_noise(&clean, 1e-3, &RngStream::new(seed, 4)).unwrap()
}

/// Draws instances until `want` meet the premises of `name`.
fn deterministic_family(
    name: &str,
    want: usize,
    mut draw: impl FnMut(&mut ChaCha8Rng, u64) -> Vec<BoundReport>,
) -> (usize, usize, usize, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(3 + name.len() as u64);
    let (mut met, mut violations, mut draws, mut worst) = (0, 0, 0usize, 0.0f64);
    while met < want && draws < 50 * want {
        draws += 1;
        for rep in draw(&mut rng, draws as u64)
            .into_iter()
            .filter(|r| r.name == name)
        {
            if !rep.premises_met || met == want {
                continue;
            }
            met += 1;
            violations += !strict_holds(&rep) as usize;
            if rep.rhs > 0.0 && rep.rhs.is_finite() {
                let ratio = match rep.relation {
                    Relation::AtMost => rep.lhs / rep.rhs,
                    Relation::AtLeast => rep.rhs / rep.lhs,
                };
                worst = worst.max(ratio);
            }
        }
    }
    (met, violations, draws, worst)
}

fn deterministic_suite() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    let mut record = |label: &str, (met, violations, draws, worst): (usize, usize, usize, f64)| {
        pass &= met == 200 && violations == 0;
        lines.push(format!(
            "{label}: {violations} violations in {met} premise-satisfying instances ({draws} draws, max lhs/rhs {worst:.3})"
        ));
    };
    record(
        "halko",
        deterministic_family("halko", 200, |rng, seed| {
            let (n, m) = (rng.random_range(8..40), rng.random_range(8..40));
            let target = Target::new(random_full_rank(n, m, rng, seed)).unwrap();
            let r = rng.random_range(1..=4.min(n.min(m) - 1));
            let d = rng.random_range(r..=m);
            let cols = sample_columns(&target.matrix, d, &RngStream::new(seed, 5)).unwrap();
            vec![check_halko(&target, &cols.set, r).unwrap()]
        }),
    );
    record(
        "sin-theta",
        deterministic_family("sin-theta", 200, |rng, seed| {
            let n = rng.random_range(20..60);
            let spec = SynthSpec {
                n,
                m: n,
                kind: SpectrumKind::Geometric {
                    decay: rng.random_range(0.2..0.7),
                },
                coherence: if rng.random_bool(0.5) {
                    CoherenceKind::Flat
                } else {
                    CoherenceKind::Minimal
                },
                seed: RngStream::new(seed, 6),
            };
            let target = Target::new(generate(&spec).unwrap().0).unwrap();
            let r = rng.random_range(1..=3);
            let d = rng.random_range(n / 2..=n);
            let cols = sample_columns(&target.matrix, d, &RngStream::new(seed, 7)).unwrap();
            let pair =
                build_h_pair(&target, &cols.matrix, Side::A, target.lambda_for_rank(r)).unwrap();
            check_sin_theta_sampled(&target, &pair, r).unwrap().to_vec()
        }),
    );
    let recovered = |rng: &mut ChaCha8Rng, seed: u64| {
        let (n, m) = (rng.random_range(8..40), rng.random_range(8..40));
        let target = Target::new(random_full_rank(n, m, rng, seed)).unwrap();
        let r = rng.random_range(1..=3.min(n.min(m) - 1));
        let d = rng.random_range(r..=n.min(m));
        let omega = rng.random_range(r * r..=n * m);
        let s = sample_inputs(&target.matrix, d, omega, r, &RngStream::new(seed, 8)).unwrap();
        (target, s, r)
    };
    record(
        "combine",
        deterministic_family("combine", 200, |rng, seed| {
            let (target, s, _) = recovered(rng, seed);
            match curlow::recovery::recover(&s.inputs, 0.0) {
                Ok(res) => vec![check_combine_run(&target, &res).unwrap()],
                Err(Error::IllPosed { .. }) => Vec::new(),
                Err(e) => panic!("{e}"),
            }
        }),
    );
    record(
        "delta-triangle",
        deterministic_family("delta-triangle", 200, |rng, seed| {
            let (target, s, r) = recovered(rng, seed);
            let bases = build_bases(&s.inputs.a, &s.inputs.b, r).unwrap();
            vec![check_delta_triangle(&target, &bases).unwrap()]
        }),
    );
    outcome(pass, lines.join("; "))
}

fn probabilistic_suite() -> Outcome {
    let start = Instant::now();
    let cfg = ExperimentConfig {
        synth: SynthConfig {
            decay: 0.25,
            ..synth_config(
                SynthKind::GeometricSpectrum,
                300,
                300,
                CoherenceChoice::Minimal,
            )
        },
        r: 1,
        d: Budget::Auto,
        omega_count: Budget::Count(20_000),
        t: 3.0,
        delta: 0.5,
        trials: 100,
        seed: 4,
        checks: vec![
            CheckId::Delta,
            CheckId::Projection,
            CheckId::Omega1Spectrum,
            CheckId::StrongConvexity,
            CheckId::HSandwich,
            CheckId::MuHat,
            CheckId::FullRankRecovery,
        ],
        ..Default::default()
    };
    let out = verify_trials(&cfg).unwrap();
    let elapsed = start.elapsed();
    let mut pass = elapsed < Duration::from_secs(300);
    let mut parts = Vec::new();
    for s in &out.summary {
        if s.name == "full-rank-recovery" {
            continue;
        }
        let ok = s.premise_trials > 0 && s.rate.unwrap_or(0.0) >= 0.9;
        pass &= ok;
        parts.push(format!(
            "{} {}/{}",
            s.name, s.holds_with_premises, s.premise_trials
        ));
    }
    // The entry budget of the full-rank recovery guarantee exceeds n*m at this
    // size, so the rate is taken over trials meeting every other premise.
    let frr: Vec<&BoundReport> = out
        .trials
        .iter()
        .flat_map(|t| t.reports.iter())
        .filter(|r| r.name == "full-rank-recovery")
        .collect();
    let gated: Vec<&&BoundReport> = frr
        .iter()
        .filter(|r| {
            r.params
                .get("premises_met_except_omega")
                .and_then(|v| v.as_bool())
                == Some(true)
        })
        .collect();
    let held = gated.iter().filter(|r| r.holds).count();
    let omega_met = frr.iter().filter(|r| r.premises_met).count();
    pass &= !gated.is_empty() && held as f64 >= 0.9 * gated.len() as f64;
    parts.push(format!(
        "full-rank-recovery {held}/{} (|Omega| premise met in {omega_met}; needs ~{} entries)",
        gated.len(),
        frr.first()
            .and_then(|r| r.params.get("omega_min").cloned())
            .unwrap_or_default()
    ));
    outcome(
        pass,
        format!(
            "{}; n=m=300 geometric 0.25 r=1 d={} |Omega|=20000; {:.1}s (limit 300s)",
            parts.join(", "),
            out.trials[0].budgets.d,
            elapsed.as_secs_f64()
        ),
    )
}

fn full_rank_error() -> Outcome {
    let cfg = ExperimentConfig {
        synth: synth_config(
            SynthKind::GeometricSpectrum,
            200,
            200,
            CoherenceChoice::Flat,
        ),
        r: 4,
        d: Budget::Count(100),
        omega_count: Budget::Count(10_000),
        trials: 50,
        seed: 5,
        checks: vec![CheckId::FullRankRecovery],
        ..Default::default()
    };
    let out = verify_trials(&cfg).unwrap();
    let reps: Vec<&BoundReport> = out.trials.iter().flat_map(|t| t.reports.iter()).collect();
    let flag = |r: &BoundReport, k: &str| r.params.get(k).and_then(|v| v.as_bool()) == Some(true);
    let gap: Vec<&&BoundReport> = reps.iter().filter(|r| flag(r, "gap_premise")).collect();
    let held = gap.iter().filter(|r| r.holds).count();
    let worst = reps.iter().map(|r| r.lhs / r.rhs).fold(0.0, f64::max);
    let d_met = reps.iter().filter(|r| flag(r, "d_premise")).count();
    let d_min = reps
        .first()
        .and_then(|r| r.params.get("d_min").cloned())
        .unwrap_or_default();
    outcome(
        reps.len() == 50 && !gap.is_empty() && held as f64 >= 0.9 * gap.len() as f64,
        format!(
            "bound held in {held}/{} gap-premise trials of {} (max lhs/rhs {worst:.4}); \
             d=100 |Omega|=10000; d premise (d >= {d_min}) met in {d_met}",
            gap.len(),
            reps.len()
        ),
    )
}

fn cur_baseline() -> Outcome {
    let base = ExperimentConfig {
        synth: SynthConfig {
            noise: 1e-3,
            ..synth_config(SynthKind::ExactLowRank, 200, 160, CoherenceChoice::Flat)
        },
        r: 3,
        trials: 50,
        seed: 6,
        cur: curlow::experiment::config::CurConfig {
            c: Some(40),
            r_rows: Some(40),
            k: Some(3),
        },
        ..Default::default()
    };
    let noisy = cur_trials(&base).unwrap();
    let within = noisy
        .trials
        .iter()
        .filter(|t| t.report.error_ratio.is_some_and(|x| x <= 2.5) || t.report.exact == Some(true))
        .count();
    let exact_cfg = ExperimentConfig {
        synth: SynthConfig {
            noise: 0.0,
            ..base.synth.clone()
        },
        seed: 7,
        ..base.clone()
    };
    let clean = cur_trials(&exact_cfg).unwrap();
    let verified: Vec<_> = clean.trials.iter().filter(|t| t.span_verified).collect();
    let exact = verified.iter().filter(|t| t.rel_frobenius <= 1e-8).count();
    outcome(
        within >= 45 && !verified.is_empty() && exact == verified.len(),
        format!(
            "noisy: ratio <= 2.5 in {within}/50 (need 45, max {:.3}); exact rank 3: {exact}/{} span-verified trials within 1e-8",
            noisy.max_ratio.unwrap_or(f64::NAN),
            verified.len()
        ),
    )
}

fn sample_sweep() -> Outcome {
    let cfg = ExperimentConfig {
        synth: synth_config(SynthKind::ExactLowRank, 512, 512, CoherenceChoice::Flat),
        r: 2,
        d: Budget::Auto,
        omega_count: Budget::Auto,
        trials: 3,
        seed: 8,
        sweep: curlow::experiment::config::SweepConfig {
            d_grid: vec![2, 4, 8, 16, 32, 64],
            omega_grid: Vec::new(),
        },
        ..Default::default()
    };
    let out = sweep_table(&cfg).unwrap();
    let argmin = |key: &dyn Fn(&curlow::experiment::SweepRow) -> f64| {
        out.rows
            .iter()
            .min_by(|a, b| key(a).total_cmp(&key(b)))
            .map(|r| r.d)
            .unwrap()
    };
    let analytic = argmin(&|r| r.analytic_total);
    let measured = argmin(&|r| r.total_observations as f64);
    let cube = 512f64.cbrt();
    let nearest = *cfg
        .sweep
        .d_grid
        .iter()
        .min_by(|a, b| {
            (**a as f64 - cube)
                .abs()
                .total_cmp(&(**b as f64 - cube).abs())
        })
        .unwrap();
    let failures: usize = out.rows.iter().map(|r| r.failures).sum();
    println!("    d  |Omega|  observed  analytic  mean_rel_error");
    for r in &out.rows {
        println!(
            "  {:>3} {:>8} {:>9} {:>9.0} {:>14.3e}",
            r.d,
            r.omega,
            r.total_observations,
            r.analytic_total,
            r.mean_rel_error.unwrap_or(f64::NAN)
        );
    }
    outcome(
        analytic == nearest && failures == 0 && out.rows.len() == 6,
        format!(
            "analytic minimum at d={analytic} (nearest grid point to n^(1/3): {nearest}); \
             measured-total minimum at d={measured}; {failures} failed solves over {} runs",
            out.rows.len() * cfg.trials
        ),
    )
}

fn hash_dir(dir: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        let bytes = std::fs::read(&p).unwrap();
        let digest = Sha256::digest(&bytes);
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        out.insert(p.file_name().unwrap().to_string_lossy().into_owned(), hex);
    }
    out
}

fn determinism() -> Outcome {
    let tmp = tempfile::TempDir::new().unwrap();
    let config = tmp.path().join("run.conf");
    std::fs::write(
        &config,
        "synth.kind = \"geometric-spectrum\"\nsynth.n = 60\nsynth.m = 50\nsynth.decay = 0.5\n\
         r = 2\nd = 20\nomega_count = 400\ntrials = 4\nseed = 9\nsave_m_hat = true\nsave_samples = true\n\
         checks = [\"halko\", \"delta\", \"h-sandwich\", \"combine\"]\nsweep.d_grid = [4, 8, 16]\ncur.c = 12\n",
    )
    .unwrap();
    let exe = env!("CARGO_BIN_EXE_curlow");
    let mut mismatched = Vec::new();
    let mut files = 0;
    for cmd in ["gen", "recover", "verify", "sweep", "cur"] {
        for format in ["json", "csv"] {
            let mut hashes = Vec::new();
            for run in 0..3 {
                let out = tmp.path().join(format!("{cmd}-{format}-{run}"));
                let status = Command::new(exe)
                    .args([cmd, "--config"])
                    .arg(&config)
                    .args(["--format", format, "--out"])
                    .arg(&out)
                    .env("CURLOW_THREADS", (run + 1).to_string())
                    .output()
                    .unwrap();
                assert!(
                    status.status.success(),
                    "{cmd}: {}",
                    String::from_utf8_lossy(&status.stderr)
                );
                hashes.push(hash_dir(&out));
            }
            files += hashes[0].len();
            if hashes.windows(2).any(|w| w[0] != w[1]) || hashes[0].is_empty() {
                mismatched.push(format!("{cmd}/{format}"));
            }
        }
    }
    outcome(
        mismatched.is_empty(),
        format!(
            "5 commands x 2 formats x 3 runs (1, 2, 3 threads); {files} files per run set; mismatches: {}",
            if mismatched.is_empty() { "none".to_string() } else { mismatched.join(", ") }
        ),
    )
}

fn main() {
    // Under `cargo test -- --list` the harness only enumerates tests.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let criteria: [(&str, fn() -> Outcome); 8] = [
        (
            "perfect recovery of exact low-rank matrices",
            perfect_recovery,
        ),
        (
            "core solver matches the pseudo-inverse oracle",
            oracle_equivalence,
        ),
        ("deterministic bounds", deterministic_suite),
        ("probabilistic bounds at t = 3", probabilistic_suite),
        ("full-rank recovery error bound", full_rank_error),
        ("CUR baseline", cur_baseline),
        ("sample-count sweep", sample_sweep),
        ("CLI determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        failed += !o.pass as usize;
        println!(
            "{} criterion {}: {name} ({:.1}s): {}",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            start.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!(
        "acceptance: {}/{} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
