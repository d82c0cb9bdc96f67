use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{ArgGroup, Args};
use serde::Serialize;

use sinai_core::env::{potential, sample_brownian, Path};
use sinai_core::landscape::{
    construct_cascade, stable_points, t_good_diagnostics, zeta_detail, CascadeTrace, DiagnosticsReport,
    StableDecomposition, ZetaDetail,
};

use crate::io::{load_environment, parse_list, read_path_csv, write_json, Versioned};
use crate::manifest::Recorder;

#[derive(Args, Debug, Serialize)]
#[command(group(ArgGroup::new("source").required(true).args(["env", "values", "path_csv", "brownian"])))]
pub struct AnalyzeArgs {
    /// Environment JSON; its potential is analysed.
    #[arg(long)]
    pub env: Option<PathBuf>,
    /// Landscape values on a unit grid, e.g. `0,-3,1,-5,2`.
    #[arg(long, allow_hyphen_values = true)]
    pub values: Option<String>,
    /// Landscape values from CSV (last column of each row).
    #[arg(long)]
    pub path_csv: Option<PathBuf>,
    /// Sample a Brownian landscape.
    #[arg(long)]
    pub brownian: bool,
    /// Grid spacing for `--path-csv` and `--brownian`.
    #[arg(long, default_value_t = 1.0)]
    pub step: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    /// Grid points of the Brownian sample.
    #[arg(long, default_value_t = 1_000_000)]
    pub length: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// `ln t` of the time scale.
    #[arg(long)]
    pub lnt: f64,
    #[arg(long, default_value_t = 2)]
    pub gamma: usize,
    /// List stable points up to this grid index (default: the last one used by zeta).
    #[arg(long)]
    pub x_max: Option<usize>,
    /// Include the multiscale cascade.
    #[arg(long)]
    pub cascade: bool,
    /// Starting exponent of the cascade (default `lnt^(-5/6)`).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Include the goodness diagnostics.
    #[arg(long)]
    pub diagnostics: bool,

    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Serialize)]
struct CascadeSummary {
    #[serde(rename = "N")]
    n_final: usize,
    a: Vec<f64>,
    zeta: f64,
    trace: CascadeTrace,
}

#[derive(Serialize)]
struct AnalyzeReport {
    source: String,
    n_points: usize,
    step: f64,
    lnt: f64,
    gamma: usize,
    zeta: f64,
    detail: ZetaDetail,
    stable: StableDecomposition,
    #[serde(skip_serializing_if = "Option::is_none")]
    cascade: Option<CascadeSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    diagnostics: Option<DiagnosticsReport>,
}

fn load_path(args: &AnalyzeArgs) -> Result<(String, Path)> {
    if let Some(file) = &args.env {
        let env = load_environment(file)?;
        return Ok((format!("potential of {}", file.display()), potential(&env)));
    }
    if let Some(text) = &args.values {
        return Ok(("values".into(), Path::from_values(parse_list(text, "value")?)?));
    }
    if let Some(file) = &args.path_csv {
        let values = read_path_csv(file)?;
        return Ok((format!("csv {}", file.display()), Path::new(args.step, values)?));
    }
    let path = sample_brownian(args.sigma2, args.step, args.length, args.seed)?;
    Ok((format!("brownian seed {}", args.seed), path))
}

pub fn run(args: AnalyzeArgs) -> Result<()> {
    let mut rec = Recorder::start("analyze", &args, Some(args.seed))?;
    let (source, path) = load_path(&args)?;
    let detail = zeta_detail(&path, args.lnt, args.gamma).context("depth functional")?;
    let x_max = args.x_max.unwrap_or(*detail.minima.last().expect("zeta has gamma minima"));
    let stable = stable_points(&path, args.lnt, x_max).context("stable points")?;
    let cascade = if args.cascade {
        let alpha = args.alpha.unwrap_or_else(|| args.lnt.powf(-5.0 / 6.0));
        let trace = construct_cascade(&path, args.lnt, args.gamma, alpha).context("cascade")?;
        Some(CascadeSummary { n_final: trace.n_final, a: trace.a_sequence(), zeta: trace.zeta(), trace })
    } else {
        None
    };
    let diagnostics = if args.diagnostics {
        Some(t_good_diagnostics(&path, args.lnt, args.gamma).context("diagnostics")?)
    } else {
        None
    };
    let report = AnalyzeReport {
        source,
        n_points: path.len(),
        step: path.step,
        lnt: args.lnt,
        gamma: args.gamma,
        zeta: detail.zeta,
        detail,
        stable,
        cascade,
        diagnostics,
    };
    write_json(args.output.as_deref(), &Versioned::new(report))?;
    if let Some(out) = &args.output {
        rec.add_output(out);
    }
    rec.finish(args.manifest.as_deref())?;
    Ok(())
}
