//! `szego`: experiment runner for the quadratic Szegő toolkit.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails, 2 on usage
//! errors.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::Value;

use commands::*;
use config::{load_config, resolve, CliError};

#[derive(Parser)]
#[command(name = "szego", version, about = "Simulate and certify the quadratic Szegő equation")]
struct Cli {
    /// JSON document keyed by subcommand name; fills flags not given.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the equation and record invariants and K_u² spectra.
    Simulate(SimulateArgs),
    /// Traveling-wave residuals over a parameter grid.
    VerifyTw(VerifyTwArgs),
    /// Spectral report of H_u and K_u plus both Lax residuals.
    Spectral(SpectralArgs),
    /// Perturbation of v_r inside V(3).
    Instability(InstabilityArgs),
    /// Closed-form and coefficient checks of the steady V(3) family.
    Steady(SteadyArgs),
    /// Write u(z^N) for a state file.
    Compose(ComposeArgs),
    /// Flow commutation with u ↦ u(z^N).
    ComposeCheck(ComposeCheckArgs),
    /// Seeded sweep of E ≤ ½Q²(Q+M).
    GnCheck(GnCheckArgs),
    /// Run the acceptance criteria and print a pass/fail matrix.
    Certify(CertifyArgs),
}

fn section<'a>(config: &'a Option<Value>, name: &str) -> Option<&'a Value> {
    config.as_ref().and_then(|c| c.get(name))
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    let config = cli.config.as_deref().map(load_config).transpose()?;
    match &cli.command {
        Command::Simulate(a) => simulate(&resolve(a, section(&config, "simulate"))?),
        Command::VerifyTw(a) => verify_tw(&resolve(a, section(&config, "verify-tw"))?),
        Command::Spectral(a) => spectral(&resolve(a, section(&config, "spectral"))?),
        Command::Instability(a) => instability(&resolve(a, section(&config, "instability"))?),
        Command::Steady(a) => steady(&resolve(a, section(&config, "steady"))?),
        Command::Compose(a) => compose(&resolve(a, section(&config, "compose"))?),
        Command::ComposeCheck(a) => compose_check(&resolve(a, section(&config, "compose-check"))?),
        Command::GnCheck(a) => gn_check(&resolve(a, section(&config, "gn-check"))?),
        Command::Certify(a) => certify(&resolve(a, section(&config, "certify"))?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match run(cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("szego: {e}");
            return ExitCode::from(match e {
                CliError::Usage(_) => 2,
                CliError::Failed(_) => 1,
            });
        }
    };
    for line in &outcome.lines {
        println!("{line}");
    }
    if let Some(path) = &outcome.out {
        if let Err(e) = outcome.write_artifact(path) {
            eprintln!("szego: {e}");
            return ExitCode::from(2);
        }
    }
    if outcome.passed() {
        if outcome.verdict {
            println!("{}: PASS", outcome.command);
        }
        ExitCode::SUCCESS
    } else {
        println!("{}: FAIL", outcome.command);
        eprintln!("{}", serde_json::json!({ "failures": outcome.failures }));
        ExitCode::from(1)
    }
}
