//! `sinai`: reproducible experiments on meeting times of walks in a random environment.
//!
//! Exit codes: 0 on success, 2 for configuration errors, 3 when a computation is
//! infeasible at the requested size or a landscape is too short, 1 otherwise.

mod analyze;
mod experiment;
mod gen_env;
mod io;
mod manifest;
mod survival;

use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

/// A configuration problem detected by the command line layer itself.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser)]
#[command(name = "sinai", version, about = "Meeting times of random walks in a Sinai environment")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw an environment and write it as JSON.
    GenEnv(gen_env::GenEnvArgs),
    /// Stable points, the depth functional, the cascade and diagnostics of a landscape.
    Analyze(analyze::AnalyzeArgs),
    /// Monte Carlo survival curve written as CSV.
    Simulate(survival::SimulateArgs),
    /// Exact quenched survival probabilities.
    Exact(survival::ExactArgs),
    /// Experiment drivers.
    #[command(subcommand)]
    Experiment(experiment::Experiment),
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use sinai_core::Error as E;
    for cause in err.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::Config(_) | E::Domain(_) => 2,
                E::Horizon { .. } | E::Feasibility(_) => 3,
            };
        }
    }
    1
}

/// Runs `f` on a pool of `workers` threads, or on the global pool when absent.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match workers {
        None => f(),
        Some(0) => Err(UsageError("--workers must be at least 1".into()).into()),
        Some(k) => rayon::ThreadPoolBuilder::new().num_threads(k).build()?.install(f),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenEnv(a) => gen_env::run(a),
        Command::Analyze(a) => analyze::run(a),
        Command::Simulate(a) => survival::run_simulate(a),
        Command::Exact(a) => survival::run_exact(a),
        Command::Experiment(e) => experiment::run(e),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
