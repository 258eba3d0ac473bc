//! Experiment driver for the hp-adaptive solver: parses run settings, sweeps
//! epsilon values and writes plot-ready CSV files plus a JSON summary.

use std::ffi::OsString;
use std::path::Path;

use clap::{Parser, Subcommand};

pub mod config;
pub mod output;
pub mod run;

pub use config::{Emit, OscDegree, RunArgs, RunConfig};
pub use run::{execute, Summary};

#[derive(Debug, Parser)]
#[command(name = "hp-robust", version, about = "hp-adaptive FEM for -eps u'' + d u = f in 1D")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Adaptive runs over a list of epsilon values.
    Run(RunArgs),
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Output(format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) | CliError::Output(_) => 1,
        }
    }
}

/// Parses `args` (program name first), runs, and returns the exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let Command::Run(args) = cli.command;
    let result = RunConfig::from_args(&args).and_then(|config| execute(&config));
    match result {
        Ok(summary) => {
            for r in &summary.runs {
                eprintln!(
                    "{} eps={:e}: {} iterations, {} elements, max p {}, estimate {:.3e}",
                    summary.problem, r.epsilon, r.iterations, r.n_elem, r.max_p, r.final_estimate
                );
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
