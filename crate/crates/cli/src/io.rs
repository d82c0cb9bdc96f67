//! File formats and flag parsing shared by the subcommands.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use sinai_core::env::Environment;

use crate::manifest::SCHEMA;
use crate::UsageError;

/// A JSON document tagged with the schema version.
#[derive(Serialize, Deserialize)]
pub struct Versioned<T> {
    pub schema: u32,
    #[serde(flatten)]
    pub body: T,
}

impl<T> Versioned<T> {
    pub fn new(body: T) -> Self {
        Self { schema: SCHEMA, body }
    }
}

pub fn write_json(path: Option<&Path>, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_versioned<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let doc: Versioned<T> =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if doc.schema != SCHEMA {
        bail!(UsageError(format!("{} has schema {}, expected {SCHEMA}", path.display(), doc.schema)));
    }
    Ok(doc.body)
}

pub fn load_environment(path: &Path) -> Result<Environment> {
    let env: Environment = read_versioned(path)?;
    env.validate().with_context(|| format!("environment in {}", path.display()))?;
    Ok(env)
}

/// Parses a comma-separated list such as `1,2,3`.
pub fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|_| UsageError(format!("bad {what} entry {s:?}")).into()))
        .collect()
}

/// Reads a landscape from CSV: one value per row, or several columns of which
/// the last is used. A non-numeric first row is treated as a header.
pub fn read_path_csv(path: &Path) -> Result<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut values = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let Some(cell) = record.iter().next_back() else { continue };
        match cell.parse::<f64>() {
            Ok(v) => values.push(v),
            Err(_) if row == 0 => {}
            Err(_) => bail!(UsageError(format!("{}: row {} is not a number: {cell:?}", path.display(), row + 1))),
        }
    }
    Ok(values)
}

/// Times from either plain values or `ln t` values.
pub fn time_grid(t_grid: Option<&str>, lnt_grid: Option<&str>) -> Result<Vec<f64>> {
    match (t_grid, lnt_grid) {
        (Some(t), None) => parse_list(t, "t-grid"),
        (None, Some(l)) => Ok(parse_list::<f64>(l, "lnt-grid")?.into_iter().map(f64::exp).collect()),
        _ => bail!(UsageError("give exactly one of --t-grid and --lnt-grid".into())),
    }
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
