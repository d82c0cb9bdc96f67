use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use serde::Serialize;

use sinai_core::env::{gen_environment, EnvironmentLaw, TableEntry};

use crate::io::{write_json, Versioned};
use crate::manifest::Recorder;

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LawFlag {
    /// Rates `(rho, 1/rho)` or `(1/rho, rho)` with equal probability.
    Bernoulli,
    /// Log rate ratio uniform on `[-ln rho, ln rho]`.
    Uniform,
    /// Rate pairs and probabilities read from `--table`.
    Table,
}

#[derive(Args, Debug, Serialize)]
pub struct LawArgs {
    #[arg(long, value_enum, default_value = "bernoulli")]
    pub law: LawFlag,
    #[arg(long, default_value_t = std::f64::consts::E)]
    pub rho: f64,
    /// Ellipticity bound: every rate must lie in `[1/kappa, kappa]`.
    #[arg(long)]
    pub kappa: f64,
    /// JSON array of `{"wp": .., "wm": .., "prob": ..}` rows for `--law table`.
    #[arg(long)]
    pub table: Option<PathBuf>,
}

impl LawArgs {
    pub fn to_law(&self) -> Result<EnvironmentLaw> {
        Ok(match self.law {
            LawFlag::Bernoulli => EnvironmentLaw::bernoulli(self.rho, self.kappa),
            LawFlag::Uniform => EnvironmentLaw::uniform(self.rho, self.kappa),
            LawFlag::Table => {
                let path = self
                    .table
                    .as_ref()
                    .ok_or_else(|| crate::UsageError("--law table needs --table FILE".into()))?;
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let entries: Vec<TableEntry> =
                    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
                EnvironmentLaw::table(entries, self.kappa)
            }
        })
    }
}

#[derive(Args, Debug, Serialize)]
pub struct GenEnvArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub law: LawArgs,
    /// Number of sites.
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Manifest location; defaults to `<output>.manifest.json`.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

pub fn run(args: GenEnvArgs) -> Result<()> {
    let mut rec = Recorder::start("gen-env", &args, Some(args.seed))?;
    let law = args.law.to_law()?;
    let env = gen_environment(&law, args.n, args.seed)?;
    write_json(Some(&args.output), &Versioned::new(&env))?;
    rec.add_output(&args.output);
    rec.finish(args.manifest.as_deref())?;
    Ok(())
}
