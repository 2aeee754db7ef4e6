//! `gkdv solve | verify | sweep --config FILE`
//!
//! Exit codes: 0 success, 1 computational failure or failed check, 2 usage error.

mod commands;
mod config;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::{cmd_solve, cmd_sweep, cmd_verify, Failure};
use crate::config::{RunConfig, Suite};

#[derive(Parser)]
#[command(
    name = "gkdv",
    version,
    about = "Pseudo-spectral lab for dissipative generalized KdV equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Picard fixed point on the selected [0, T]; writes snapshots and the trace.
    Solve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Numerical checks of the estimates; exits 1 if any check fails.
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `verify.suite` of the config.
        #[arg(long, value_enum)]
        suite: Option<Suite>,
    },
    /// Cartesian sweep over the `sweep` section of the config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Solve { config } => cmd_solve(&load(&config)?),
        Command::Verify { config, suite } => {
            let mut cfg = load(&config)?;
            if let Some(s) = suite {
                cfg.verify.suite = s;
            }
            cmd_verify(&cfg)
        }
        Command::Sweep { config, jobs } => cmd_sweep(&load(&config)?, jobs),
    }
}

fn load(path: &Path) -> Result<RunConfig, Failure> {
    RunConfig::load(path).map_err(Failure::Usage)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}
