//! `gridlaw`: configuration-driven experiments.
//!
//! Exit codes: 0 all thresholds met, 1 a threshold failed, 2 usage or
//! configuration error, 3 numeric failure.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::{output_dir, Artifacts};

#[derive(Parser)]
#[command(
    name = "gridlaw",
    version,
    about = "Grid-matching price processes: simulation, pricing and hedging experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML experiment config; every section is optional.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,

    /// Output directory [default: run.output_dir, then $GRIDLAW_OUT_DIR, then ./gridlaw-out].
    #[arg(short, long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for path generation.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Overrides run.seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate paths and dump them as CSV.
    Simulate,
    /// Check grid marginals and returns against the GBM law.
    Validate,
    /// Price the option with the configured proportional ν.
    Price,
    /// Find the ν whose price equals a target.
    InvertNu {
        #[arg(long)]
        target: Option<f64>,
    },
    /// No-arbitrage price interval of the option.
    Bounds,
    /// Delta-hedge the option along simulated paths.
    Hedge,
    /// Pick the hedging ν that minimises a criterion.
    SelectNu,
    /// Fokker–Planck residual of the configured drift.
    FpResidual,
    /// Constant-volatility counterexample.
    AppendixDemo,
    /// Closed-form against quadrature drift.
    DriftCheck,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
            ExperimentConfig::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    cfg.resolve()
}

fn run(cli: Cli) -> Result<bool, CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot set up {n} threads: {e}")))?;
    }
    let cfg = load(&cli)?;
    let out = Artifacts::create(output_dir(cli.out.as_deref(), cfg.run.output_dir.as_deref()))?;
    out.write_text("config.toml", &cfg.to_toml())?;
    let outcome = match cli.command {
        Command::Simulate => commands::simulate(&cfg, &out),
        Command::Validate => commands::validate(&cfg, &out),
        Command::Price => commands::price(&cfg, &out),
        Command::InvertNu { target } => commands::invert_nu(&cfg, &out, target),
        Command::Bounds => commands::bounds(&cfg, &out),
        Command::Hedge => commands::hedge(&cfg, &out),
        Command::SelectNu => commands::select(&cfg, &out),
        Command::FpResidual => commands::fp(&cfg, &out),
        Command::AppendixDemo => commands::appendix(&cfg, &out),
        Command::DriftCheck => commands::drift_check(&cfg, &out),
    }?;
    println!(
        "{}",
        serde_json::to_string_pretty(&outcome.summary).expect("summaries serialize")
    );
    eprintln!("artifacts in {}", out.dir().display());
    Ok(outcome.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("threshold check failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
