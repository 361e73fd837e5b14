//! `impdde`: batch front-end for the impulsive delay equation toolkit.
//!
//! Every command reads a TOML problem description and writes CSV files into
//! the output directory. Exit codes: 0 success, 1 failed certificate or
//! probe, 2 invalid config, 3 violated hypothesis, 4 inconclusive.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Number of rayon workers; unset means one per core.
const THREADS_ENV: &str = "IMPDDE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "impdde", version, about = "Impulsive delay differential equations: simulation, fundamental matrices, certificates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Problem description (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for CSV files.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Integration step (also the validation grid step).
    #[arg(long, default_value_t = 1e-3)]
    step: f64,
    /// Also write a plotting script for the produced CSV.
    #[arg(long)]
    plot_script: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Which {
    T5,
    T6,
    Example,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum History {
    Phi,
    Zero,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the standing hypotheses.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Integrate the equation and dump the trajectory.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// End time (defaults to the config horizon).
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long, value_enum, default_value = "phi")]
        history: History,
    },
    /// Numerical fundamental matrices X(., s) and their envelope bound.
    Fundamental {
        #[command(flatten)]
        common: Common,
        /// Base times s.
        #[arg(long, value_delimiter = ',', default_value = "0")]
        s: Vec<f64>,
        /// End time (defaults to the config horizon).
        #[arg(long)]
        horizon: Option<f64>,
    },
    /// Compare the representation formula against direct integration.
    Reconstruct {
        #[command(flatten)]
        common: Common,
        /// Target times.
        #[arg(long, value_delimiter = ',', required = true)]
        t: Vec<f64>,
        /// Quadrature step.
        #[arg(long, default_value_t = 1e-3)]
        qstep: f64,
    },
    /// Evaluate a stability or integrability certificate.
    Certify {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        which: Which,
        /// Horizon on which suprema and probes are evaluated.
        #[arg(long, default_value_t = 40.0)]
        horizon: f64,
    },
    /// Probe L_p membership of solutions for the configured forcing and
    /// any extra forcings.
    Probe {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long, value_delimiter = ',', default_value = "10,20,40")]
        horizons: Vec<f64>,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        /// Additional forcing, one expression per component separated by ';'.
        #[arg(long)]
        forcing: Vec<String>,
    },
    /// Fit an exponential envelope to sampled fundamental-matrix norms.
    Decay {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "0")]
        s: Vec<f64>,
        /// Length of each run.
        #[arg(long, default_value_t = 15.0)]
        duration: f64,
    },
}

/// Outcome codes shared by all commands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success = 0,
    Fail = 1,
    InvalidConfig = 2,
    HypothesisViolation = 3,
    Inconclusive = 4,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Ok(threads) = std::env::var(THREADS_ENV) {
        match threads.parse::<usize>() {
            Ok(n) => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    log::warn!("could not size the worker pool: {e}");
                }
            }
            Err(_) => log::warn!("ignoring {THREADS_ENV}={threads}: not a count"),
        }
    }
    let cli = Cli::parse();
    let code = match commands::run(cli.command) {
        Ok(outcome) => outcome,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            failure.outcome
        }
    };
    ExitCode::from(code as u8)
}
