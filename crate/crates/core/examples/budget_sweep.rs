// Total observations against `d`: `d n + n^2/d^2` is smallest near
// `d = n^(1/3)`.

use curlow::bounds::optimal_d;
use curlow::experiment::config::SweepConfig;
use curlow::experiment::{sweep_csv, sweep_table, ExperimentConfig, SynthConfig};

pub fn run_example() -> curlow::Result<()> {
    let n = 216;
    let cfg = ExperimentConfig {
        synth: SynthConfig {
            n,
            m: n,
            ..SynthConfig::default()
        },
        r: 2,
        trials: 2,
        sweep: SweepConfig {
            d_grid: vec![2, 3, 6, 12, 24],
            omega_grid: Vec::new(),
        },
        ..ExperimentConfig::default()
    };
    let table = sweep_table(&cfg)?;
    print!("{}", sweep_csv(&table));
    println!("optimal_d({n}) = {}", optimal_d(n));
    Ok(())
}

fn main() {
    run_example().expect("sweep example failed");
}
