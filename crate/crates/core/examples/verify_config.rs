// Run a bound-checking experiment from config text, as `curlow verify`
// does.

use std::path::Path;

use curlow::experiment::{verify_trials, ExperimentConfig};

const CONFIG: &str = r#"
synth.kind = "geometric-spectrum"
synth.n = 80
synth.m = 80
synth.decay = 0.3
synth.coherence = "minimal"
r = 1
d = 40
omega_count = 1500
trials = 8
seed = 21
checks = ["halko", "combine", "projection", "strong-convexity"]
"#;

pub fn run_example() -> curlow::Result<()> {
    let cfg = ExperimentConfig::from_text(CONFIG, Path::new("inline"))?;
    let out = verify_trials(&cfg)?;
    for s in &out.summary {
        println!(
            "{:<18} held {}/{} (premises met in {})",
            s.name, s.holds, s.trials, s.premise_trials
        );
    }
    Ok(())
}

fn main() {
    run_example().expect("verify example failed");
}
