//! `simulate` and `exact`: Monte Carlo and exact survival probabilities.

use std::fs::File;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use serde::Serialize;

use sinai_core::oracle::{exact_survival_with, Backend, SurvivalOptions, SurvivalRecord};
use sinai_core::simulate::{survival_with_outcomes, MeetingOutcome, Mode, WalkerConfig};

use crate::io::{load_environment, parse_list, time_grid, write_json, Versioned};
use crate::manifest::Recorder;
use crate::{with_workers, UsageError};

/// Walk count and starting sites shared by both commands.
#[derive(Args, Debug, Serialize)]
pub struct WalkerArgs {
    /// Environment JSON written by `gen-env`.
    #[arg(long)]
    pub env: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub gamma: usize,
    /// Starting sites, strictly increasing (default `1,2,...,gamma`).
    #[arg(long)]
    pub starts: Option<String>,
    /// Plain times, e.g. `0,1,10`.
    #[arg(long)]
    pub t_grid: Option<String>,
    /// Times given as `ln t`, e.g. `2,4,6`.
    #[arg(long)]
    pub lnt_grid: Option<String>,
}

impl WalkerArgs {
    fn config(&self, t_max: f64) -> Result<WalkerConfig> {
        match &self.starts {
            None => Ok(WalkerConfig::new(self.gamma, t_max)),
            Some(text) => {
                let starts: Vec<usize> = parse_list(text, "start")?;
                if starts.len() != self.gamma {
                    return Err(UsageError(format!(
                        "--starts lists {} sites but --gamma is {}",
                        starts.len(),
                        self.gamma
                    ))
                    .into());
                }
                Ok(WalkerConfig::with_starts(starts, t_max))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeFlag {
    Meeting,
    Coalescing,
    Simultaneous,
}

impl From<ModeFlag> for Mode {
    fn from(m: ModeFlag) -> Self {
        match m {
            ModeFlag::Meeting => Mode::Meeting,
            ModeFlag::Coalescing => Mode::Coalescing,
            ModeFlag::Simultaneous => Mode::Simultaneous,
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub walkers: WalkerArgs,
    #[arg(long, value_enum, default_value = "meeting")]
    pub mode: ModeFlag,
    #[arg(long, default_value_t = 10_000)]
    pub replicas: usize,
    /// Censoring horizon (default: the last grid time).
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for the replicas; results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Survival curve CSV with columns `t,p,stderr,n_replicas`.
    #[arg(short, long)]
    pub output: PathBuf,
    /// Also write every replica's outcome as JSON.
    #[arg(long)]
    pub dump: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Serialize)]
struct CsvRow {
    t: f64,
    p: f64,
    stderr: f64,
    n_replicas: usize,
}

#[derive(Serialize)]
struct ReplicaDump<'a> {
    mode: ModeFlag,
    seed: u64,
    n_boundary: usize,
    outcomes: &'a [MeetingOutcome],
}

pub fn run_simulate(args: SimulateArgs) -> Result<()> {
    let mut rec = Recorder::start("simulate", &args, Some(args.seed))?;
    let env = load_environment(&args.walkers.env)?;
    let grid = time_grid(args.walkers.t_grid.as_deref(), args.walkers.lnt_grid.as_deref())?;
    let t_max = args.t_max.unwrap_or_else(|| grid.last().copied().unwrap_or(0.0));
    let cfg = args.walkers.config(t_max)?;
    let (curve, outcomes) = with_workers(args.workers, || {
        Ok(survival_with_outcomes(&env, &cfg, &grid, args.replicas, args.seed, args.mode.into())?)
    })?;

    let file = File::create(&args.output).with_context(|| format!("creating {}", args.output.display()))?;
    let mut csv = csv::Writer::from_writer(file);
    for k in 0..curve.t_grid.len() {
        csv.serialize(CsvRow { t: curve.t_grid[k], p: curve.p[k], stderr: curve.stderr[k], n_replicas: curve.n_replicas })?;
    }
    csv.flush()?;
    rec.add_output(&args.output);

    if let Some(dump) = &args.dump {
        let body = ReplicaDump { mode: args.mode, seed: args.seed, n_boundary: curve.n_boundary, outcomes: &outcomes };
        write_json(Some(dump), &Versioned::new(body))?;
        rec.add_output(dump);
    }
    if curve.n_boundary > 0 {
        eprintln!(
            "warning: {} of {} replicas reached the end of the environment and were counted as survivors",
            curve.n_boundary, curve.n_replicas
        );
    }
    rec.finish(args.manifest.as_deref())?;
    Ok(())
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendFlag {
    Auto,
    Sparse,
}

#[derive(Args, Debug, Serialize)]
pub struct ExactArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub walkers: WalkerArgs,
    /// Truncation site: the last walk is reflected at `L`.
    #[arg(long = "L", default_value_t = 600)]
    pub l: usize,
    /// Relative accuracy of each probability.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, value_enum, default_value = "auto")]
    pub backend: BackendFlag,
    /// Always use the requested truncation instead of certified smaller ones.
    #[arg(long)]
    pub no_adaptive: bool,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Serialize)]
struct ExactRow {
    #[serde(flatten)]
    record: SurvivalRecord,
    /// `-ln p / ln t`, present for `t > 1`.
    e: Option<f64>,
}

#[derive(Serialize)]
struct ExactReport {
    gamma: usize,
    starts: Vec<usize>,
    records: Vec<ExactRow>,
}

pub fn run_exact(args: ExactArgs) -> Result<()> {
    let mut rec = Recorder::start("exact", &args, None)?;
    let env = load_environment(&args.walkers.env)?;
    let grid = time_grid(args.walkers.t_grid.as_deref(), args.walkers.lnt_grid.as_deref())?;
    let cfg = args.walkers.config(grid.last().copied().unwrap_or(0.0))?;
    let opts = SurvivalOptions {
        backend: match args.backend {
            BackendFlag::Auto => Backend::Auto,
            BackendFlag::Sparse => Backend::Sparse,
        },
        adaptive: !args.no_adaptive,
        ..SurvivalOptions::default()
    };
    let records = exact_survival_with(&env, &cfg, &grid, args.l, args.tol, &opts)
        .context("exact survival (lower --L, --gamma or the time grid if this is too large)")?;
    let records = records
        .into_iter()
        .map(|r| {
            let e = (r.t > 1.0).then(|| -r.log_p / r.t.ln());
            ExactRow { record: r, e }
        })
        .collect();
    let report = ExactReport { gamma: cfg.gamma, starts: cfg.starts, records };
    write_json(args.output.as_deref(), &Versioned::new(report))?;
    if let Some(out) = &args.output {
        rec.add_output(out);
    }
    rec.finish(args.manifest.as_deref())?;
    Ok(())
}
