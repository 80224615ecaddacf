mod batch;
mod error;
mod hull;
mod ingest;
mod job;
mod select;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use subdata::exchange::{DEFAULT_ALG1_ITERATIONS, DEFAULT_CANDIDATES_PER_COVARIATE};
use subdata::{Execution, ExperimentConfig, Method, TimingGrid};

use crate::batch::BootstrapJob;
use crate::error::{exit_code, CliError};
use crate::hull::HullJob;
use crate::ingest::IngestSpec;
use crate::job::{execute, load_toml, replay, Job};
use crate::select::SelectJob;

#[derive(Parser)]
#[command(
    name = "subdata",
    version,
    about = "D-optimal subdata selection for linear regression"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select k rows of an ingested dataset.
    Select(SelectArgs),
    /// Run a simulation study from a TOML config.
    Simulate(BatchArgs),
    /// Bootstrap MSE over an ingested dataset from a TOML config.
    Bootstrap(BatchArgs),
    /// Alg1 wall time and variance gain over a (k, K, iterations) grid.
    Timing(BatchArgs),
    /// Compare planar hulls of the full data and a selection.
    Hull(HullArgs),
    /// Rerun a command from its manifest and verify the outputs match.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// Delimited text file.
    #[arg(long)]
    input: Option<PathBuf>,
    /// TOML file whose `[ingest]` table supplies defaults for these flags.
    #[arg(long)]
    preset: Option<PathBuf>,
    /// Single character, `tab` or `whitespace`.
    #[arg(long)]
    delimiter: Option<String>,
    #[arg(long)]
    no_header: bool,
    /// Response column, by name or 1-based position.
    #[arg(long)]
    response: Option<String>,
    /// Covariate columns; all non-response columns by default.
    #[arg(long, value_delimiter = ',')]
    columns: Option<Vec<String>>,
    #[arg(long)]
    skip_rows: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    log_columns: Option<Vec<String>>,
}

#[derive(serde::Deserialize)]
struct PresetFile {
    ingest: IngestSpec,
}

impl IngestArgs {
    fn resolve(self) -> Result<IngestSpec> {
        let mut spec = match &self.preset {
            Some(p) => load_toml::<PresetFile>(p)?.ingest,
            None => IngestSpec::at(PathBuf::new()),
        };
        if let Some(v) = self.input {
            spec.path = v;
        }
        if let Some(v) = self.delimiter {
            spec.delimiter = v;
        }
        if self.no_header {
            spec.header = false;
        }
        if self.response.is_some() {
            spec.response = self.response;
        }
        if self.columns.is_some() {
            spec.columns = self.columns;
        }
        if let Some(v) = self.skip_rows {
            spec.skip_rows = v;
        }
        if let Some(v) = self.log_columns {
            spec.log_columns = v;
        }
        Ok(spec)
    }
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: subdata::Error| e.to_string())
}

#[derive(Args)]
struct SelectArgs {
    #[command(flatten)]
    ingest: IngestArgs,
    /// uniform, iboss, oss, alg1 or valg1.
    #[arg(long, value_parser = parse_method)]
    method: Method,
    #[arg(short, long)]
    k: usize,
    /// Candidates per covariate for the exchange methods (at least 2).
    #[arg(short = 'K', long = "candidates", default_value_t = DEFAULT_CANDIDATES_PER_COVARIATE)]
    candidates: usize,
    #[arg(long, default_value_t = DEFAULT_ALG1_ITERATIONS)]
    iterations: usize,
    /// Starting selection for alg1 and valg1.
    #[arg(long, value_parser = parse_method, default_value = "oss")]
    start: Method,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Drop this fraction of small-norm rows after each OSS pick.
    #[arg(long)]
    prune_fraction: Option<f64>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct BatchArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Run repetitions on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct HullArgs {
    #[command(flatten)]
    ingest: IngestArgs,
    /// `indices.txt` from a select run.
    #[arg(long)]
    selection: PathBuf,
    /// Covariate pairs as `x:y`, comma separated.
    #[arg(long, value_delimiter = ',', value_parser = parse_pair)]
    pairs: Vec<(String, String)>,
    #[arg(long)]
    all_pairs: bool,
    #[arg(long)]
    svg: bool,
    #[arg(long)]
    out: PathBuf,
}

fn parse_pair(s: &str) -> Result<(String, String), String> {
    s.split_once(':')
        .map(|(a, b)| (a.to_owned(), b.to_owned()))
        .ok_or_else(|| format!("`{s}` is not of the form x:y"))
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn exec_mode(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::default()
    }
}

fn batch_job<T: for<'de> serde::Deserialize<'de>>(path: &Path, wrap: fn(T) -> Job) -> Result<Job> {
    Ok(wrap(load_toml(path)?))
}

fn validate(job: &Job) -> Result<()> {
    match job {
        Job::Simulate(c) => c.validate()?,
        Job::Timing(g) => g.validate()?,
        Job::Bootstrap(b) if b.methods.is_empty() => {
            return Err(CliError::Usage(
                "invalid parameter `methods`: at least one method is required".into(),
            )
            .into())
        }
        _ => {}
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let (job, exec, out) = match cli.command {
        Command::Select(a) => {
            let job = Job::Select(SelectJob {
                ingest: a.ingest.resolve()?,
                method: a.method,
                k: a.k,
                candidates_per_covariate: a.candidates,
                iterations: a.iterations,
                start: a.start,
                rng_seed: a.seed,
                prune_fraction: a.prune_fraction,
            });
            (job, exec_mode(a.sequential), a.out)
        }
        Command::Simulate(a) => (
            batch_job::<ExperimentConfig>(&a.config, Job::Simulate)?,
            exec_mode(a.sequential),
            a.out,
        ),
        Command::Bootstrap(a) => (
            batch_job::<BootstrapJob>(&a.config, Job::Bootstrap)?,
            exec_mode(a.sequential),
            a.out,
        ),
        Command::Timing(a) => (
            batch_job::<TimingGrid>(&a.config, Job::Timing)?,
            Execution::Sequential,
            a.out,
        ),
        Command::Hull(a) => {
            let job = Job::Hull(HullJob {
                ingest: a.ingest.resolve()?,
                selection: a.selection,
                pairs: a.pairs,
                all_pairs: a.all_pairs,
                svg: a.svg,
            });
            (job, Execution::Sequential, a.out)
        }
        Command::Replay(a) => {
            replay(&a.manifest, &a.out)?;
            println!("replay matches {}", a.manifest.display());
            return Ok(());
        }
    };
    validate(&job)?;
    execute(&job, exec, &out)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
