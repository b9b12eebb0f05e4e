//! Command-line front end: dataset generation, single training runs,
//! replicated experiment sweeps, and bound diagnostics.

mod config;
mod experiment;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wjdot::Error;

use config::{parse_config, ExperimentConfig};

#[derive(Parser)]
#[command(name = "wjdot", version, about = "Multi-source domain adaptation via weighted joint-distribution transport")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config's `output`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base seed; overrides the config's `seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Draw one synthetic dataset and write sources.csv / target.csv.
    Generate(Common),
    /// Train the single configured method once; writes a model checkpoint.
    Train(Common),
    /// Run the full replication sweep and write summary/alpha/trajectory CSVs.
    Experiment {
        #[command(flatten)]
        common: Common,
        /// Worker threads for the run grid (0 = one per CPU).
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Compare bound diagnostics between learned and uniform source weights.
    Diagnose(Common),
}

fn load(common: &Common) -> wjdot::Result<(ExperimentConfig, PathBuf)> {
    let mut config = parse_config(&common.config)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    let out = common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&config.output));
    Ok((config, out))
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::InvalidInput(_) | Error::Config(_) | Error::Parse { .. } => 1,
        _ => 2,
    }
}

fn run(cli: Cli) -> wjdot::Result<u8> {
    match &cli.command {
        Command::Generate(common) => {
            let (config, out) = load(common)?;
            experiment::run_generate(&config, &out)?;
            println!("wrote {}", out.join("sources.csv").display());
            println!("wrote {}", out.join("target.csv").display());
            Ok(0)
        }
        Command::Train(common) => {
            let (config, out) = load(common)?;
            let model_path = experiment::run_train(&config, &out)?;
            println!("wrote {}", model_path.display());
            Ok(0)
        }
        Command::Experiment { common, jobs } => {
            let (config, out) = load(common)?;
            let failures = experiment::run_experiment(&config, &out, *jobs)?;
            println!("wrote {}", out.join("summary.csv").display());
            if failures > 0 {
                eprintln!("{failures} method runs failed; see runs.csv");
                return Ok(2);
            }
            Ok(0)
        }
        Command::Diagnose(common) => {
            let (config, out) = load(common)?;
            experiment::run_diagnose(&config, &out)?;
            println!("wrote {}", out.join("diagnostics.csv").display());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
