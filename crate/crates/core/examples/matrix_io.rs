// Write and read back a matrix and an observed-entry set.

use curlow::io::{read_matrix, read_omega, write_matrix, write_omega, MatrixFormat};
use curlow::sampling::{sample_entries, RngStream};
use curlow::synth::{generate, CoherenceKind, SpectrumKind, SynthSpec};

pub fn run_example() -> curlow::Result<()> {
    let dir = std::env::temp_dir().join(format!("curlow-io-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("temp dir");
    let spec = SynthSpec {
        n: 30,
        m: 20,
        kind: SpectrumKind::PowerLaw { exponent: 1.5 },
        coherence: CoherenceKind::Flat,
        seed: RngStream::new(1, 0),
    };
    let (m, _) = generate(&spec)?;
    for format in [MatrixFormat::DenseArray, MatrixFormat::Csv] {
        let path = dir.join(format!("m.{}", format.extension()));
        write_matrix(&m, &path, format)?;
        assert_eq!(read_matrix(&path)?, m);
        println!("{} round-trips exactly", path.display());
    }
    let omega = sample_entries(&m, 50, &RngStream::new(1, 1))?;
    let path = dir.join("omega.csv");
    write_omega(&omega, &path)?;
    assert_eq!(read_omega(&path, None)?, omega);
    println!("{} holds {} entries", path.display(), omega.len());
    std::fs::remove_dir_all(&dir).ok();
    Ok(())
}

fn main() {
    run_example().expect("io example failed");
}
