// Check several error bounds on one sampled full-rank instance.

use curlow::bounds::{
    check_delta, check_delta_triangle, check_full_rank_recovery, check_halko, check_projection,
    Target,
};
use curlow::recovery::{recover, sample_inputs};
use curlow::sampling::RngStream;
use curlow::synth::{generate, CoherenceKind, SpectrumKind, SynthSpec};

pub fn run_example() -> curlow::Result<()> {
    let spec = SynthSpec {
        n: 120,
        m: 120,
        kind: SpectrumKind::Geometric { decay: 0.3 },
        coherence: CoherenceKind::Minimal,
        seed: RngStream::new(3, 0),
    };
    let target = Target::new(generate(&spec)?.0)?;
    let (r, d, t) = (1, 60, 3.0);
    let s = sample_inputs(&target.matrix, d, 3000, r, &RngStream::new(3, 1))?;
    let res = recover(&s.inputs, 0.0)?;

    let mut reports = vec![check_halko(&target, &s.col_idx, r)?];
    reports.extend(check_projection(&target, &res.bases, r, d, t)?);
    reports.push(check_delta(&target, &res.bases, r, d, t)?);
    reports.push(check_delta_triangle(&target, &res.bases)?);
    reports.push(check_full_rank_recovery(
        &target,
        &res.m_hat(),
        r,
        d,
        3000,
        t,
    )?);
    for rep in &reports {
        println!(
            "{:<20} lhs {:.3e}  rhs {:.3e}  holds {:<5}  premises {}",
            rep.name, rep.lhs, rep.rhs, rep.holds, rep.premises_met
        );
    }
    assert!(reports.iter().all(|r| !r.is_violation()));
    Ok(())
}

fn main() {
    run_example().expect("bounds example failed");
}
