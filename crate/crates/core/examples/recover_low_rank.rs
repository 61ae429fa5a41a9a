// Recover an exact low-rank matrix from `d` columns, `d` rows and a few
// hundred entries.

use curlow::bounds::sample_size_low_rank;
use curlow::coherence::mu_r;
use curlow::recovery::{recover, sample_inputs};
use curlow::sampling::RngStream;
use curlow::synth::{generate, CoherenceKind, SpectrumKind, SynthSpec};

pub fn run_example() -> curlow::Result<()> {
    let r = 3;
    let spec = SynthSpec {
        n: 150,
        m: 120,
        kind: SpectrumKind::ExactLowRank { r },
        coherence: CoherenceKind::Minimal,
        seed: RngStream::new(11, 0),
    };
    let (m, _) = generate(&spec)?;
    let mu = mu_r(&m, r)?.mu;
    let budget = sample_size_low_rank(mu, r, 3.0)?;
    println!(
        "mu(r) = {mu:.3}; d >= {}, |Omega| >= {}",
        budget.d_min, budget.omega_min
    );

    let d = budget.d_min.min(120);
    let sampled = sample_inputs(&m, d, budget.omega_min, r, &RngStream::new(11, 1))?;
    let result = recover(&sampled.inputs, 0.0)?;
    let err = (&m - result.m_hat()).norm() / m.norm();
    println!(
        "observed {} of {} entries; relative error {err:.2e}",
        d * (150 + 120) + budget.omega_min,
        150 * 120
    );
    assert!(err < 1e-8);
    Ok(())
}

fn main() {
    run_example().expect("recovery example failed");
}
