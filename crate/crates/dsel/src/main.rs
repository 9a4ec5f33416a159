use std::fs::File;
use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use dsel::{run_to, ConfigError, Experiment, ExperimentConfig, RunError};

/// Runs one differential-feedback experiment and writes its results as CSV.
#[derive(Debug, Parser)]
#[command(name = "dsel", version)]
struct Cli {
    /// mse_surface, rate_surface, rate_section or capacity.
    experiment: String,
    /// Flat key = value configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when neither this nor `out` in the config is set.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn execute(cli: Cli) -> Result<(), RunError> {
    let experiment: Experiment = cli
        .experiment
        .parse()
        .map_err(|msg| ConfigError::named("experiment", msg))?;
    let mut cfg = ExperimentConfig::load(experiment, &cli.config)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.out_path = Some(out);
    }
    match &cfg.out_path {
        Some(path) => run_to(&cfg, BufWriter::new(File::create(path)?)),
        None => run_to(&cfg, io::stdout().lock()),
    }
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
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dsel: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
