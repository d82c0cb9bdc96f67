//! Run manifests: a JSON sidecar recording what produced an output file.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Version of every JSON document this tool writes.
pub const SCHEMA: u32 = 1;

#[derive(Debug, Serialize)]
pub struct OutputDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub schema: u32,
    pub command: String,
    /// Every flag of the command after defaults were applied.
    pub config: Value,
    pub seed: Option<u64>,
    pub tool_version: &'static str,
    pub rng: &'static str,
    pub wall_time_s: f64,
    pub outputs: Vec<OutputDigest>,
}

pub fn sha256_file(path: &Path) -> Result<(String, u64)> {
    let bytes = fs::read(path).with_context(|| format!("reading {} for its digest", path.display()))?;
    Ok((hex::encode(Sha256::digest(&bytes)), bytes.len() as u64))
}

/// Collects outputs during a command and writes the manifest at the end.
pub struct Recorder {
    command: String,
    config: Value,
    seed: Option<u64>,
    started: Instant,
    outputs: Vec<PathBuf>,
}

impl Recorder {
    pub fn start(command: &str, config: &impl Serialize, seed: Option<u64>) -> Result<Self> {
        Ok(Self {
            command: command.to_owned(),
            config: serde_json::to_value(config)?,
            seed,
            started: Instant::now(),
            outputs: Vec::new(),
        })
    }

    pub fn add_output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    /// Writes `<first output>.manifest.json` (or `explicit` when given). Does
    /// nothing if no file was produced.
    pub fn finish(self, explicit: Option<&Path>) -> Result<Option<PathBuf>> {
        let Some(first) = self.outputs.first() else {
            return Ok(None);
        };
        let target = match explicit {
            Some(p) => p.to_path_buf(),
            None => {
                let mut name = first.as_os_str().to_owned();
                name.push(".manifest.json");
                PathBuf::from(name)
            }
        };
        let outputs = self
            .outputs
            .iter()
            .map(|p| {
                let (sha256, bytes) = sha256_file(p)?;
                Ok(OutputDigest { path: p.display().to_string(), sha256, bytes })
            })
            .collect::<Result<Vec<_>>>()?;
        let manifest = RunManifest {
            schema: SCHEMA,
            command: self.command,
            config: self.config,
            seed: self.seed,
            tool_version: env!("CARGO_PKG_VERSION"),
            rng: sinai_core::rng::RNG_NAME,
            wall_time_s: self.started.elapsed().as_secs_f64(),
            outputs,
        };
        fs::write(&target, serde_json::to_string_pretty(&manifest)? + "\n")
            .with_context(|| format!("writing manifest {}", target.display()))?;
        Ok(Some(target))
    }
}
