//! `renyi-lab`: batch front-end that runs constants tables, profile dumps,
//! solver experiments, verdict checks and parameter sweeps.
//!
//! Exit codes: 0 success, 1 configuration error, 2 solver stability error,
//! 3 at least one failed verdict.

pub mod commands;
pub mod config;

use clap::{Parser, Subcommand};

pub use config::Flags;

#[derive(Debug, Parser)]
#[command(name = "renyi-lab", version, about = "Rényi entropy power laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Table of A_p, C_p, H_p, I_p and gamma for (p, n) pairs, plus S_n.
    Constants(Flags),
    /// Dump a Barenblatt profile and its analytic and quadrature functionals.
    Barenblatt(Flags),
    /// Run the solver, write snapshots, and check the requested verdicts.
    Evolve(Flags),
    /// Check verdicts on an existing run directory or snapshot CSV.
    Verify(Flags),
    /// Run p x dim x seed experiments concurrently.
    Sweep(Flags),
}

/// Why a command stopped; maps to the exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    Config(String),
    Stability(String),
    Verdict(String),
}

impl Failure {
    pub fn config(e: impl std::fmt::Display) -> Self {
        Self::Config(e.to_string())
    }

    /// Solver errors: instability maps to its own exit code.
    pub fn from_core(e: renyi_core::Error) -> Self {
        match e {
            renyi_core::Error::Stability { .. } => Self::Stability(e.to_string()),
            other => Self::Config(other.to_string()),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 1,
            Self::Stability(_) => 2,
            Self::Verdict(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Self::Config(m) | Self::Stability(m) | Self::Verdict(m) => m,
        }
    }
}

/// Runs one subcommand and returns the process exit code.
pub fn run(cli: Cli) -> u8 {
    let result = match &cli.command {
        Command::Constants(flags) => commands::constants(flags),
        Command::Barenblatt(flags) => commands::barenblatt(flags),
        Command::Evolve(flags) => commands::evolve(flags),
        Command::Verify(flags) => commands::verify(flags),
        Command::Sweep(flags) => commands::sweep(flags),
    };
    match result {
        Ok(()) => 0,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            failure.exit_code()
        }
    }
}
