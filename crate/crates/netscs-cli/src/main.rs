//! `netscs` — communication-rate tables for event-triggered networked
//! stochastic control systems.

mod commands;
mod config;
mod output;
mod parallel;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{CliError, Overrides};

#[derive(Parser)]
#[command(
    name = "netscs",
    about = "Average communication rate of an event-triggered networked stochastic control system",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Predictive coefficient table (n, pbar, p) for the configured method.
    Coeffs(Overrides),
    /// Transient ACR table plus the stationary value and a Jury verdict.
    Acr(Overrides),
    /// Side-by-side method comparison with moment tables and error-density dumps.
    Compare(Overrides),
    /// Leader-follower platooning experiment with a threshold sweep.
    Platoon(Overrides),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Coeffs(o) => run(o, commands::cmd_coeffs),
        Command::Acr(o) => run(o, commands::cmd_acr),
        Command::Compare(o) => run(o, commands::cmd_compare),
        Command::Platoon(o) => run(o, commands::cmd_platoon),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{err}");
            match err {
                CliError::Config(_) => ExitCode::from(2),
                CliError::Runtime(_) | CliError::Io(_) => ExitCode::from(1),
            }
        }
    }
}

fn run(
    overrides: Overrides,
    command: fn(&config::RunConfig) -> Result<(), CliError>,
) -> Result<(), CliError> {
    let cfg = config::RunConfig::load(&overrides)?;
    command(&cfg)
}
