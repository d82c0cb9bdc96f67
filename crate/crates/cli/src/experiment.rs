//! Experiment drivers pairing exact tail exponents with the landscape, and
//! checking the limit law of the depth functional on Brownian landscapes.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use sinai_core::env::{gen_environment, potential};
use sinai_core::landscape::zeta;
use sinai_core::lawcheck::{brownian_zeta_samples, cdf_f, ks_test, ks_two_sample, BrownianSampling, GofReport};
use sinai_core::oracle::tail_exponent;
use sinai_core::rng::derive_seed;
use sinai_core::simulate::WalkerConfig;

use crate::gen_env::LawArgs;
use crate::io::{median, parse_list, write_json, Versioned};
use crate::manifest::Recorder;
use crate::{with_workers, UsageError};

#[derive(Subcommand)]
pub enum Experiment {
    /// Exact tail exponents `e(t)` against the depth functional over environments.
    Theorem1(Theorem1Args),
    /// The depth functional on Brownian landscapes against its limit law.
    Theorem3(Theorem3Args),
}

pub fn run(e: Experiment) -> Result<()> {
    match e {
        Experiment::Theorem1(a) => theorem1(a),
        Experiment::Theorem3(a) => theorem3(a),
    }
}

#[derive(Args, Debug, Serialize)]
pub struct Theorem1Args {
    #[command(flatten)]
    #[serde(flatten)]
    pub law: LawArgs,
    #[arg(long, default_value_t = 5000)]
    pub n_sites: usize,
    #[arg(long, default_value_t = 20)]
    pub n_envs: usize,
    /// Environment `i` is drawn with seed `derive_seed(seed, i)`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 2)]
    pub gamma: usize,
    #[arg(long, default_value = "4,6,8,10")]
    pub lnt_grid: String,
    #[arg(long = "L", default_value_t = 600)]
    pub l: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Serialize)]
struct SeriesPoint {
    lnt: f64,
    t: f64,
    e: f64,
    zeta: f64,
    log_p: f64,
    boundary_mass: f64,
    l_used: usize,
}

#[derive(Serialize)]
struct EnvSeries {
    index: usize,
    seed: u64,
    series: Vec<SeriesPoint>,
}

#[derive(Serialize)]
struct GridSummary {
    lnt: f64,
    median_abs_gap: f64,
    median_e: f64,
    median_zeta: f64,
}

#[derive(Serialize)]
struct Theorem1Report {
    experiment: &'static str,
    gamma: usize,
    environments: Vec<EnvSeries>,
    summary: Vec<GridSummary>,
}

fn theorem1(args: Theorem1Args) -> Result<()> {
    let mut rec = Recorder::start("experiment theorem1", &args, Some(args.seed))?;
    let lnts: Vec<f64> = parse_list(&args.lnt_grid, "lnt-grid")?;
    let t_grid: Vec<f64> = lnts.iter().map(|l| l.exp()).collect();
    let law = args.law.to_law()?;
    let cfg = WalkerConfig::new(args.gamma, t_grid.last().copied().unwrap_or(0.0));

    let environments = with_workers(args.workers, || {
        (0..args.n_envs)
            .into_par_iter()
            .map(|index| -> Result<EnvSeries> {
                let seed = derive_seed(args.seed, index as u64);
                let env = gen_environment(&law, args.n_sites, seed)?;
                let tail = tail_exponent(&env, &cfg, &t_grid, args.l, args.tol).with_context(|| {
                    format!("environment {index}: lower --L, --gamma or --lnt-grid to fit the oracle limits")
                })?;
                let path = potential(&env);
                let series = lnts
                    .iter()
                    .zip(&tail.records)
                    .zip(&tail.e)
                    .map(|((&lnt, r), &e)| {
                        let z = zeta(&path, lnt, args.gamma)
                            .with_context(|| format!("environment {index}: depth functional at lnt {lnt}"))?;
                        Ok(SeriesPoint {
                            lnt,
                            t: r.t,
                            e,
                            zeta: z,
                            log_p: r.log_p,
                            boundary_mass: r.boundary_mass,
                            l_used: r.l_used,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(EnvSeries { index, seed, series })
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let summary = lnts
        .iter()
        .enumerate()
        .map(|(k, &lnt)| {
            let column = |f: &dyn Fn(&SeriesPoint) -> f64| {
                let mut v: Vec<f64> = environments.iter().map(|s| f(&s.series[k])).collect();
                median(&mut v)
            };
            GridSummary {
                lnt,
                median_abs_gap: column(&|p| (p.e - p.zeta).abs()),
                median_e: column(&|p| p.e),
                median_zeta: column(&|p| p.zeta),
            }
        })
        .collect();
    let report = Theorem1Report { experiment: "theorem1", gamma: args.gamma, environments, summary };
    write_json(args.output.as_deref(), &Versioned::new(report))?;
    if let Some(out) = &args.output {
        rec.add_output(out);
    }
    rec.finish(args.manifest.as_deref())?;
    Ok(())
}

#[derive(Args, Debug, Serialize)]
pub struct Theorem3Args {
    #[arg(long, default_value_t = 2)]
    pub gamma: usize,
    #[arg(long, default_value_t = 2000)]
    pub paths: usize,
    /// One or more `ln t` values; each gets its own independent paths.
    #[arg(long, default_value = "6")]
    pub lnt: String,
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
    /// Longest Brownian path before the run is declared infeasible.
    #[arg(long, default_value_t = 1 << 25)]
    pub max_len: usize,
    #[arg(long, default_value_t = 1)]
    pub repetitions: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Significance level of the Kolmogorov-Smirnov verdicts.
    #[arg(long, default_value_t = 0.01)]
    pub level: f64,
    /// Include every sampled value in the report.
    #[arg(long)]
    pub dump_samples: bool,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Serialize)]
struct LntResult {
    lnt: f64,
    seed: u64,
    mean_excess: f64,
    min_zeta: f64,
    gof: GofReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    zeta: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct Repetition {
    index: usize,
    per_lnt: Vec<LntResult>,
    /// Two-sample test between the first two scales.
    #[serde(skip_serializing_if = "Option::is_none")]
    two_sample: Option<GofReport>,
}

#[derive(Serialize)]
struct Theorem3Report {
    experiment: &'static str,
    gamma: usize,
    offset: f64,
    repetitions: Vec<Repetition>,
    /// Per scale: how many repetitions passed the one-sample test.
    passed_one_sample: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    passed_two_sample: Option<usize>,
}

fn theorem3(args: Theorem3Args) -> Result<()> {
    let mut rec = Recorder::start("experiment theorem3", &args, Some(args.seed))?;
    let lnts: Vec<f64> = parse_list(&args.lnt, "lnt")?;
    if lnts.is_empty() {
        return Err(UsageError("--lnt needs at least one value".into()).into());
    }
    let sampling = BrownianSampling { sigma2: args.sigma2, step: args.step, max_len: args.max_len };
    let offset = (args.gamma * (args.gamma - 1) / 2) as f64;
    let gamma = args.gamma;

    let repetitions = with_workers(args.workers, || {
        (0..args.repetitions)
            .map(|index| -> Result<Repetition> {
                let rep_seed = derive_seed(args.seed, index as u64);
                let mut excess_by_lnt = Vec::with_capacity(lnts.len());
                let mut per_lnt = Vec::with_capacity(lnts.len());
                for (k, &lnt) in lnts.iter().enumerate() {
                    let seed = derive_seed(rep_seed, k as u64);
                    let zetas = brownian_zeta_samples(gamma, &[lnt], &sampling, args.paths, seed)?
                        .pop()
                        .expect("one scale requested");
                    let excess: Vec<f64> = zetas.iter().map(|z| z - offset).collect();
                    let gof = ks_test(&excess, |x| cdf_f(gamma, x.max(0.0)).unwrap_or(0.0), args.level)?;
                    per_lnt.push(LntResult {
                        lnt,
                        seed,
                        mean_excess: excess.iter().sum::<f64>() / excess.len() as f64,
                        min_zeta: zetas.iter().copied().fold(f64::INFINITY, f64::min),
                        gof,
                        zeta: args.dump_samples.then(|| zetas.clone()),
                    });
                    excess_by_lnt.push(excess);
                }
                let two_sample = match excess_by_lnt.as_slice() {
                    [a, b, ..] => Some(ks_two_sample(a, b, args.level)?),
                    _ => None,
                };
                Ok(Repetition { index, per_lnt, two_sample })
            })
            .collect::<Result<Vec<_>>>()
    })
    .context("sampling the depth functional (raise --max-len or lower --lnt)")?;

    let passed_one_sample =
        (0..lnts.len()).map(|k| repetitions.iter().filter(|r| r.per_lnt[k].gof.passed).count()).collect();
    let passed_two_sample = (lnts.len() >= 2)
        .then(|| repetitions.iter().filter(|r| r.two_sample.is_some_and(|g| g.passed)).count());
    let report = Theorem3Report {
        experiment: "theorem3",
        gamma,
        offset,
        repetitions,
        passed_one_sample,
        passed_two_sample,
    };
    write_json(args.output.as_deref(), &Versioned::new(report))?;
    if let Some(out) = &args.output {
        rec.add_output(out);
    }
    rec.finish(args.manifest.as_deref())?;
    Ok(())
}
