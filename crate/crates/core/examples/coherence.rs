// Incoherence and numerical rank of flat and spiky matrices.

use curlow::coherence::{mu_lambda, mu_r, numerical_rank};
use curlow::sampling::RngStream;
use curlow::synth::{generate, CoherenceKind, SpectrumKind, SynthSpec};

pub fn run_example() -> curlow::Result<()> {
    let n = 100;
    for (label, coherence) in [
        ("flat", CoherenceKind::Flat),
        ("minimal", CoherenceKind::Minimal),
        (
            "spiky",
            CoherenceKind::Spiky {
                index: 0,
                weight: 0.9,
            },
        ),
    ] {
        let spec = SynthSpec {
            n,
            m: n,
            kind: SpectrumKind::Geometric { decay: 0.6 },
            coherence,
            seed: RngStream::new(5, 0),
        };
        let (m, _) = generate(&spec)?;
        let lambda = 0.6f64.powi(4) / (n * n) as f64;
        let rank = numerical_rank(&m, lambda)?;
        println!(
            "{label:>8}: mu(3) = {:6.2}  mu(lambda) = {:6.2}  r(M, lambda) = {:.2}",
            mu_r(&m, 3)?.mu,
            mu_lambda(&m, lambda)?,
            rank.value
        );
    }
    Ok(())
}

fn main() {
    run_example().expect("coherence example failed");
}
