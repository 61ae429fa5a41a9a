use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use curlow::experiment::{
    cmd_cur, cmd_gen, cmd_recover, cmd_sweep, cmd_verify, ExperimentConfig, ReportFormat,
    RunOptions,
};

#[derive(Parser)]
#[command(
    name = "curlow",
    version,
    about = "Low-rank recovery from sampled rows, columns and entries"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Config file with dotted `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Reads the target matrix from a file instead of generating it.
    #[arg(long, global = true)]
    matrix: Option<PathBuf>,

    /// Overrides one config key, e.g. `--set synth.n=300`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Generate a synthetic matrix with its spectrum and properties.
    Gen,
    /// Sample and recover one instance; report error metrics.
    Recover,
    /// Run the configured bound checks over seeded trials.
    Verify,
    /// Sweep d or |Omega| and tabulate error against budget.
    Sweep,
    /// Run the CUR baseline.
    Cur,
}

#[derive(ValueEnum, Clone, Copy)]
enum Format {
    Json,
    Csv,
}

fn run(cli: &Cli) -> curlow::Result<()> {
    let mut overrides = cli.overrides.clone();
    if let Some(seed) = cli.seed {
        overrides.push(format!("seed={seed}"));
    }
    if let Some(m) = &cli.matrix {
        overrides.push(format!("matrix={:?}", m.display().to_string()));
    }
    let cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path, &overrides)?,
        None => ExperimentConfig::from_text_with("", "<defaults>".as_ref(), &overrides)?,
    };
    let format = match cli.format {
        Format::Json => ReportFormat::Json,
        Format::Csv => ReportFormat::Csv,
    };
    let opts = RunOptions::new(&cli.out, format);
    let written = match cli.command {
        Command::Gen => cmd_gen(&cfg, &opts)?,
        Command::Recover => cmd_recover(&cfg, &opts)?,
        Command::Verify => cmd_verify(&cfg, &opts)?,
        Command::Sweep => cmd_sweep(&cfg, &opts)?,
        Command::Cur => cmd_cur(&cfg, &opts)?,
    };
    for p in written {
        println!("{}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(1);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
