// CUR decomposition of a noisy rank-3 matrix against the best rank-3
// approximation.

use curlow::cur::{cur_decompose, cur_error_ratio, CurReport};
use curlow::sampling::RngStream;
use curlow::synth::{add_relative_noise, generate, CoherenceKind, SpectrumKind, SynthSpec};

pub fn run_example() -> curlow::Result<()> {
    let spec = SynthSpec {
        n: 200,
        m: 160,
        kind: SpectrumKind::ExactLowRank { r: 3 },
        coherence: CoherenceKind::Flat,
        seed: RngStream::new(8, 0),
    };
    let (clean, _) = generate(&spec)?;
    let noisy = add_relative_noise(&clean, 1e-3, &RngStream::new(8, 1))?;
    for (label, m) in [("clean", &clean), ("noisy", &noisy)] {
        let f = cur_decompose(m, 40, 40, &RngStream::new(8, 2))?;
        let ratio = cur_error_ratio(m, &f, 3)?;
        println!(
            "{label}: {}",
            serde_json::to_string(&CurReport::new(&f, ratio)).unwrap()
        );
    }
    Ok(())
}

fn main() {
    run_example().expect("CUR example failed");
}
