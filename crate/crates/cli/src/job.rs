//! Resolved command configurations, artifact writing and manifest replay.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use subdata::{Execution, ExperimentConfig, TimingGrid};

use crate::batch::{self, BootstrapJob};
use crate::error::CliError;
use crate::hull::{self, HullJob};
use crate::ingest::{ingest, IngestSpec, Ingested};
use crate::select::{self, SelectJob};

pub const MANIFEST: &str = "manifest.json";
pub const TIMINGS: &str = "timings.json";

/// Everything needed to rerun a command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", content = "config", rename_all = "lowercase")]
pub enum Job {
    Select(SelectJob),
    Simulate(ExperimentConfig),
    Bootstrap(BootstrapJob),
    Timing(TimingGrid),
    Hull(HullJob),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub rows: usize,
    pub covariates: Vec<String>,
    pub response: Option<String>,
    pub rejected: usize,
    pub skipped: usize,
}

impl From<&Ingested> for IngestReport {
    fn from(g: &Ingested) -> Self {
        Self {
            rows: g.data.n(),
            covariates: g.covariates.clone(),
            response: g.response.clone(),
            rejected: g.rejected,
            skipped: g.skipped,
        }
    }
}

/// Deterministic outputs of a command, written verbatim and checksummed.
#[derive(Debug, Default)]
pub struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.files.push((name.into(), bytes));
        Ok(())
    }

    pub fn csv<T: Serialize>(
        &mut self,
        name: &str,
        rows: impl IntoIterator<Item = T>,
    ) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r)?;
        }
        self.files
            .push((name.into(), w.into_inner().context("flushing csv")?));
        Ok(())
    }

    pub fn text(&mut self, name: &str, body: String) {
        self.files.push((name.into(), body.into_bytes()));
    }
}

pub struct JobOutput {
    pub artifacts: Artifacts,
    /// Wall-clock measurements, kept out of the checksummed artifacts.
    pub timings: serde_json::Value,
    pub seeds: Vec<u64>,
    pub inputs: Vec<InputDigest>,
    pub ingest: Option<IngestReport>,
    /// Human-readable table for the terminal.
    pub table: String,
    pub failures: Option<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub job: Job,
    pub execution: Execution,
    pub seeds: Vec<u64>,
    pub inputs: Vec<InputDigest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ingest: Option<IngestReport>,
    /// sha256 of every deterministic output file.
    pub outputs: BTreeMap<String, String>,
    pub timings: serde_json::Value,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn digest_file(path: &Path) -> Result<InputDigest> {
    let bytes = fs::read(path).map_err(|source| crate::ingest::IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(InputDigest {
        path: path.to_path_buf(),
        sha256: sha256_hex(&bytes),
    })
}

/// Ingests and fingerprints the input in one step.
pub fn load(spec: &IngestSpec) -> Result<(Ingested, InputDigest)> {
    if spec.path.as_os_str().is_empty() {
        return Err(CliError::Usage("no input file given".into()).into());
    }
    let digest = digest_file(&spec.path)?;
    let data = ingest(spec).with_context(|| format!("ingesting {}", spec.path.display()))?;
    Ok((data, digest))
}

impl Job {
    pub fn run(&self, exec: Execution) -> Result<JobOutput> {
        match self {
            Job::Select(j) => select::run(j, exec),
            Job::Simulate(c) => batch::simulate(c, exec),
            Job::Bootstrap(j) => batch::bootstrap(j, exec),
            Job::Timing(g) => batch::timing(g),
            Job::Hull(j) => hull::run(j),
        }
    }
}

/// Runs `job`, writes its artifacts, timings and manifest under `out`.
pub fn execute(job: &Job, exec: Execution, out: &Path) -> Result<Manifest> {
    let started = Instant::now();
    let output = job.run(exec)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut outputs = BTreeMap::new();
    for (name, bytes) in &output.artifacts.files {
        fs::write(out.join(name), bytes).with_context(|| format!("writing {name}"))?;
        outputs.insert(name.clone(), sha256_hex(bytes));
    }
    let timings = serde_json::json!({
        "total_seconds": started.elapsed().as_secs_f64(),
        "detail": output.timings,
    });
    fs::write(out.join(TIMINGS), serde_json::to_vec_pretty(&timings)?)?;
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        job: job.clone(),
        execution: exec,
        seeds: output.seeds,
        inputs: output.inputs,
        ingest: output.ingest,
        outputs,
        timings,
    };
    fs::write(out.join(MANIFEST), serde_json::to_vec_pretty(&manifest)?)?;
    print!("{}", output.table);
    if let Some((failed, total)) = output.failures {
        if failed > 0 {
            return Err(CliError::BatchFailures { failed, total }.into());
        }
    }
    Ok(manifest)
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| {
        CliError::Config {
            path: path.into(),
            message: e.to_string(),
        }
        .into()
    })
}

/// Reruns a recorded job into `out` and checks every output checksum.
pub fn replay(manifest_path: &Path, out: &Path) -> Result<Manifest> {
    let recorded = read_manifest(manifest_path)?;
    for input in &recorded.inputs {
        let now = digest_file(&input.path)?;
        if now.sha256 != input.sha256 {
            return Err(CliError::ReplayMismatch(format!(
                "input {} has changed",
                input.path.display()
            ))
            .into());
        }
    }
    let fresh = execute(&recorded.job, recorded.execution, out)?;
    let differing: Vec<&String> = recorded
        .outputs
        .iter()
        .filter(|(name, sum)| fresh.outputs.get(*name) != Some(*sum))
        .map(|(name, _)| name)
        .collect();
    if !differing.is_empty() || fresh.outputs.len() != recorded.outputs.len() {
        return Err(CliError::ReplayMismatch(format!("outputs differ: {differing:?}")).into());
    }
    Ok(fresh)
}

/// Parses a TOML config file into `T`.
pub fn load_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config {
        path: path.into(),
        message: e.to_string(),
    })?;
    toml::from_str(&text).map_err(|e| {
        CliError::Config {
            path: path.into(),
            message: e.to_string(),
        }
        .into()
    })
}
