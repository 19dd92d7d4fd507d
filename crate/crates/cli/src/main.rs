//! `flightlab` command-line front end.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::Failure;

#[derive(Debug, Parser)]
#[command(
    name = "flightlab",
    version,
    about = "Random flights: sampling, densities, rate functions, Monte Carlo checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate trajectories and write them as JSON Lines.
    Simulate(Opts),
    /// Tabulate the radial density and cumulative mass.
    Density(Opts),
    /// Tabulate rate functions on a radius grid.
    Rates(Opts),
    /// Run a Monte Carlo decay-rate or exit-bound check.
    Verify(Opts),
}

/// Options shared by every subcommand. Flags override values read from
/// `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct Opts {
    /// JSON experiment manifest.
    #[arg(long)]
    pub config: Option<std::path::PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
    /// Paths to simulate, or samples per horizon for `verify`.
    #[arg(long)]
    pub samples: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Model: X, Y or Z.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub t: Option<f64>,
    /// Number of direction changes (X, Y).
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub w: Option<f64>,
    #[arg(long)]
    pub r: Option<f64>,
    /// Grid intervals for `density`.
    #[arg(long)]
    pub points: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, opts) = match &cli.command {
        Command::Simulate(o) => ("simulate", o),
        Command::Density(o) => ("density", o),
        Command::Rates(o) => ("rates", o),
        Command::Verify(o) => ("verify", o),
    };
    let result = commands::with_threads(opts.threads, || match &cli.command {
        Command::Simulate(o) => commands::simulate(o),
        Command::Density(o) => commands::density(o),
        Command::Rates(o) => commands::rates(o),
        Command::Verify(o) => commands::verify(o),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verdict) => ExitCode::from(1),
        Err(Failure::Run(e)) => {
            eprintln!("flightlab {name}: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Invalid(e)) => {
            eprintln!("flightlab {name}: invalid configuration: {e:#}");
            ExitCode::from(2)
        }
    }
}
