//! Command-line driver for the banditlb testbed.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod verify;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{execute, Command, RunConfig};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "banditlb", version, about = "Adversarial-bandit lower-bound experiments")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    /// Master seed; overrides `plan.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for replications (results do not depend on it).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, env = "BANDITLB_OUT", default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Run an experiment plan and write regret.csv.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Override a config value, e.g. `--set plan.replications=100`.
        #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Evaluate closed-form bounds and write bounds.csv.
    Bounds {
        /// File of [bound] sections.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        bound: Option<String>,
        /// Parameters such as `K=2 T=8192 delta=0.15`.
        params: Vec<String>,
    },
    /// Run a verification suite (or `all`) and write verify.csv.
    Verify {
        suite: String,
        /// Replications per Monte Carlo cell.
        #[arg(long)]
        replications: Option<usize>,
    },
    /// Run a plan over a T-grid, fit the log-log slope, write scaling.csv.
    Scaling {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
        overrides: Vec<String>,
    },
}

/// Parses arguments, executes, and returns the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let command = match cli.command {
        Sub::Simulate { config, overrides } => Command::Simulate { config, overrides },
        Sub::Bounds { config, bound, params } => Command::Bounds { config, bound, params },
        Sub::Verify { suite, replications } => Command::Verify { suite, replications },
        Sub::Scaling { config, overrides } => Command::Scaling { config, overrides },
    };
    let cfg = RunConfig { command, out: cli.out, seed: cli.seed, workers: cli.workers };
    match execute(&cfg) {
        Ok(()) => 0,
        Err(e) => {
            let code = e.exit_code();
            if code == 3 {
                eprintln!("warning: {e}");
            } else {
                eprintln!("error: {e}");
            }
            code
        }
    }
}
