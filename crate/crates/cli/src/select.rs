use anyhow::Result;
use serde::{Deserialize, Serialize};
use subdata::experiment::select_methods;
use subdata::seeding::OssOptions;
use subdata::{
    efficiency, scale_to_unit_cube, EfficiencyReport, Execution, Method, MethodSettings,
};

use crate::ingest::IngestSpec;
use crate::job::{load, Artifacts, IngestReport, JobOutput};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectJob {
    pub ingest: IngestSpec,
    pub method: Method,
    pub k: usize,
    #[serde(rename = "K")]
    pub candidates_per_covariate: usize,
    pub iterations: usize,
    /// Starting selection for alg1 and valg1.
    pub start: Method,
    pub rng_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prune_fraction: Option<f64>,
}

#[derive(Debug, Serialize)]
struct PassReport {
    pass: usize,
    accepted: usize,
    log_v: f64,
}

#[derive(Debug, Serialize)]
struct TraceReport {
    pool_size: usize,
    initial_log_v: f64,
    final_log_v: f64,
    accepted: usize,
    passes: Vec<PassReport>,
}

#[derive(Debug, Serialize)]
struct SelectReport<'a> {
    method: Method,
    start: Option<Method>,
    n: usize,
    p: usize,
    k: usize,
    #[serde(rename = "K")]
    candidates_per_covariate: usize,
    iterations: usize,
    ingest: &'a IngestReport,
    /// Computed on the covariates mapped onto [-1, 1]^p.
    efficiency: EfficiencyReport,
    /// File line of each selected row, in `indices.txt` order.
    lines: Vec<u64>,
    trace: Option<TraceReport>,
}

pub fn run(job: &SelectJob, exec: Execution) -> Result<JobOutput> {
    let (ingested, digest) = load(&job.ingest)?;
    let data = &ingested.data;
    let settings = MethodSettings {
        k: job.k,
        candidates_per_covariate: job.candidates_per_covariate,
        alg1_iterations: job.iterations,
        exchange_seed: job.start,
        oss: OssOptions {
            prune_fraction: job.prune_fraction,
            execution: exec,
        },
    };
    settings.validate()?;
    let (scaled, _) = scale_to_unit_cube(data)?;
    let (_, run) = select_methods(data, &scaled, &[job.method], &settings, job.rng_seed)
        .pop()
        .expect("one method requested");
    let run = run?;
    let eff = efficiency(&scaled, &run.selection)?;
    let sorted = run.selection.sorted();
    let summary = IngestReport::from(&ingested);

    let trace = run.trace.as_ref().map(|t| TraceReport {
        pool_size: t.pool_size,
        initial_log_v: t.initial_log_v,
        final_log_v: t.final_log_v,
        accepted: t.accepted,
        passes: t
            .passes
            .iter()
            .map(|p| PassReport {
                pass: p.pass,
                accepted: p.accepted,
                log_v: p.log_v,
            })
            .collect(),
    });
    let report = SelectReport {
        method: job.method,
        start: job.method.is_exchange().then_some(job.start),
        n: data.n(),
        p: data.p(),
        k: job.k,
        candidates_per_covariate: job.candidates_per_covariate,
        iterations: settings.iterations_for(job.method),
        ingest: &summary,
        efficiency: eff,
        lines: sorted.iter().map(|&i| ingested.lines[i]).collect(),
        trace,
    };

    let mut artifacts = Artifacts::default();
    artifacts.text(
        "indices.txt",
        sorted.iter().map(|i| format!("{i}\n")).collect(),
    );
    artifacts.json("report.json", &report)?;
    let table = format!(
        "{} selected {} of {} rows (p = {}, {} rejected)\n  D-eff {:.6}  A-eff {:.6}  log V {:.6}\n",
        job.method,
        job.k,
        data.n(),
        data.p(),
        ingested.rejected,
        eff.d_eff,
        eff.a_eff,
        eff.gen_variance.ln(),
    );
    Ok(JobOutput {
        artifacts,
        timings: serde_json::json!({
            "selection_seconds": run.seconds,
            "passes": run.trace.map(|t| t.passes.iter().map(|p| p.elapsed_secs).collect::<Vec<_>>()),
        }),
        seeds: vec![job.rng_seed],
        inputs: vec![digest],
        ingest: Some(summary),
        table,
        failures: None,
    })
}
