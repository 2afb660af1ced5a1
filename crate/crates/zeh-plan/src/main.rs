//! `zeh-plan`: size neighborhood photovoltaic panels and batteries from
//! historical consumption data, under three investment models.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use zeh_plan::config::{load_config, RunConfig};
use zeh_plan::pipeline::{run, Mode, RunOptions};

/// Stochastic sizing of neighborhood photovoltaic and battery investments.
#[derive(Debug, Parser)]
#[command(name = "zeh-plan", version, about)]
struct Cli {
    /// What to compute.
    #[arg(value_enum)]
    mode: Mode,
    /// JSON run configuration; omit for all defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for report.json and the CSV tables.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's Monte Carlo sample count.
    #[arg(long)]
    samples: Option<usize>,
    /// Suppress the stdout summary.
    #[arg(long)]
    quiet: bool,
    /// Also export the sampled problem as an LP file (small runs only).
    #[arg(long)]
    export_lp: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut config = match &cli.config {
        Some(path) => match load_config(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("{e}");
                return ExitCode::from(e.exit_code() as u8);
            }
        },
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(samples) = cli.samples {
        config.n_samples = samples;
    }

    let opts = RunOptions { quiet: cli.quiet, export_lp: cli.export_lp };
    match run(cli.mode, &config, &cli.out, &opts) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
