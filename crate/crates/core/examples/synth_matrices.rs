// Planted spectra and the measured properties used for premise gating.

use curlow::sampling::RngStream;
use curlow::synth::{generate, measured_properties, CoherenceKind, SpectrumKind, SynthSpec};

pub fn run_example() -> curlow::Result<()> {
    let r = 2;
    for kind in [
        SpectrumKind::ExactLowRank { r: 4 },
        SpectrumKind::Geometric { decay: 0.5 },
        SpectrumKind::PowerLaw { exponent: 2.0 },
    ] {
        let spec = SynthSpec {
            n: 80,
            m: 60,
            kind,
            coherence: CoherenceKind::Flat,
            seed: RngStream::new(2, 0),
        };
        let (m, truth) = generate(&spec)?;
        let lambda = truth.sigma_at(r - 1).powi(2) / (80.0 * 60.0);
        let p = measured_properties(&m, r, lambda)?;
        println!(
            "{kind:?}: sigma_1..3 = {:.3?}, mu(r) = {:.2}, r(M, lambda) = {:.2}, gap {:.2}",
            &truth.sigma.as_slice()[..3],
            p.mu_r,
            p.numerical_rank,
            p.gap
        );
    }
    Ok(())
}

fn main() {
    run_example().expect("synth example failed");
}
