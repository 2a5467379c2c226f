//! `spiralsim` — liquidation-spiral simulation, toxicity-frontier
//! analysis, parameter sweeps, and self-verification.
//!
//! Exit codes: 0 on success, 1 on a domain failure (position not
//! liquidatable, verification checks red), 2 on configuration or usage
//! errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use spiralsim_cli::commands::{
    cmd_frontier, cmd_simulate, cmd_sweep, cmd_verify, SweepFlags, VerifyFlags,
};
use spiralsim_cli::format::OutputFormat;

#[derive(Parser)]
#[command(
    name = "spiralsim",
    version,
    about = "Simulate liquidation spirals and verify slippage-aware toxicity frontiers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report the penalty factor, toxicity frontiers, and max safe
    /// liquidation threshold for a scenario's market
    Frontier {
        /// Scenario file (TOML)
        #[arg(long)]
        config: PathBuf,
        /// Write the report here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output encoding
        #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
        format: OutputFormat,
    },
    /// Run one liquidation spiral and write the per-step trajectory
    Simulate {
        /// Scenario file (TOML)
        #[arg(long)]
        config: PathBuf,
        /// Write the trajectory here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output encoding
        #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
        format: OutputFormat,
    },
    /// Evaluate frontier agreement over a parameter grid, one row per cell
    Sweep {
        /// Grid file (TOML)
        #[arg(long)]
        config: PathBuf,
        /// Write the table here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output encoding
        #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
        format: OutputFormat,
        /// Probe fraction for empirical frontier location (overrides the file)
        #[arg(long)]
        eta: Option<f64>,
        /// Bisection tolerance for frontier location (overrides the file)
        #[arg(long)]
        tol: Option<f64>,
        /// Seed recorded with the run (the sweep itself is deterministic)
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the built-in verification suite and report each check
    Verify {
        /// Optional settings file (TOML); defaults reproduce the shipped run
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write the report here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
        /// Sampling seed for the randomized checks (overrides the file)
        #[arg(long)]
        seed: Option<u64>,
        /// Multiplier on the analytic penalty factor in the
        /// frontier-agreement checks; values other than 1.0 demonstrate
        /// that those checks bite
        #[arg(long)]
        lambda_scale: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Frontier { config, out, format } => {
            cmd_frontier(&config, out.as_deref(), format)
        }
        Command::Simulate { config, out, format } => {
            cmd_simulate(&config, out.as_deref(), format)
        }
        Command::Sweep { config, out, format, eta, tol, seed } => {
            cmd_sweep(&config, out.as_deref(), format, SweepFlags { eta, tol, seed })
        }
        Command::Verify { config, out, seed, lambda_scale } => {
            cmd_verify(config.as_deref(), out.as_deref(), VerifyFlags { seed, lambda_scale })
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(error.exit_code())
        }
    }
}
