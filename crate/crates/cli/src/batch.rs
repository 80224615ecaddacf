//! Simulation, bootstrap and timing batches.

use std::fmt::Write as _;

use anyhow::Result;
use serde::{Deserialize, Serialize};
use subdata::experiment::r_squared;
use subdata::{
    bootstrap_mse, run_experiment_with, timing_study, BootstrapConfig, Execution, ExperimentConfig,
    ExperimentReport, Method, TimingGrid,
};

use crate::error::CliError;
use crate::ingest::IngestSpec;
use crate::job::{load, Artifacts, IngestReport, JobOutput};

#[derive(Serialize)]
struct RecordRow<'a> {
    method: Method,
    repetition: usize,
    seed: u64,
    n: usize,
    k: usize,
    #[serde(rename = "K")]
    candidates_per_covariate: usize,
    iterations: usize,
    mse_intercept: f64,
    mse_slopes: f64,
    gen_variance: f64,
    d_eff: f64,
    a_eff: f64,
    log_det_q: f64,
    accepted_swaps: usize,
    outliers_selected: usize,
    error: &'a str,
}

#[derive(Serialize)]
struct SelectionRow<'a> {
    method: Method,
    repetition: usize,
    k: usize,
    indices: &'a [usize],
}

#[derive(Serialize)]
struct SecondsRow {
    method: Method,
    repetition: usize,
    k: usize,
    seconds: f64,
}

/// Records, summaries and selections without any wall-clock field.
fn report_artifacts(report: &ExperimentReport) -> Result<Artifacts> {
    let mut a = Artifacts::default();
    a.csv(
        "records.csv",
        report.records.iter().map(|r| RecordRow {
            method: r.method,
            repetition: r.repetition,
            seed: r.seed,
            n: r.n,
            k: r.k,
            candidates_per_covariate: r.candidates_per_covariate,
            iterations: r.iterations,
            mse_intercept: r.mse_intercept,
            mse_slopes: r.mse_slopes,
            gen_variance: r.gen_variance,
            d_eff: r.d_eff,
            a_eff: r.a_eff,
            log_det_q: r.log_det_q,
            accepted_swaps: r.accepted_swaps,
            outliers_selected: r.outliers_selected,
            error: r.error.as_deref().unwrap_or(""),
        }),
    )?;
    let summaries: Vec<serde_json::Value> = report
        .summaries
        .iter()
        .map(|s| {
            let mut v = serde_json::to_value(s)?;
            v.as_object_mut()
                .expect("summary is a struct")
                .remove("seconds");
            Ok(v)
        })
        .collect::<Result<_>>()?;
    a.json("summary.json", &summaries)?;
    let selections: Vec<SelectionRow> = report
        .records
        .iter()
        .map(|r| SelectionRow {
            method: r.method,
            repetition: r.repetition,
            k: r.k,
            indices: &r.selection,
        })
        .collect();
    a.json("selections.json", &selections)?;
    Ok(a)
}

fn report_timings(report: &ExperimentReport) -> serde_json::Value {
    let rows: Vec<SecondsRow> = report
        .records
        .iter()
        .map(|r| SecondsRow {
            method: r.method,
            repetition: r.repetition,
            k: r.k,
            seconds: r.seconds,
        })
        .collect();
    serde_json::json!({ "records": rows })
}

fn summary_table(report: &ExperimentReport) -> String {
    let mut t = String::new();
    let _ = writeln!(
        t,
        "{:<8} {:>8} {:>6} {:>6} {:>12} {:>12} {:>9} {:>9}",
        "method", "n", "k", "fail", "mse_slopes", "mse_icpt", "d_eff", "a_eff"
    );
    for s in &report.summaries {
        let _ = writeln!(
            t,
            "{:<8} {:>8} {:>6} {:>6} {:>12.4e} {:>12.4e} {:>9.5} {:>9.5}",
            s.method.as_str(),
            s.n,
            s.k,
            s.failures,
            s.mse_slopes.mean,
            s.mse_intercept.mean,
            s.d_eff.mean,
            s.a_eff.mean
        );
    }
    t
}

fn batch_output(
    report: ExperimentReport,
    seeds: Vec<u64>,
    inputs: Vec<crate::job::InputDigest>,
    ingest: Option<IngestReport>,
) -> Result<JobOutput> {
    Ok(JobOutput {
        artifacts: report_artifacts(&report)?,
        timings: report_timings(&report),
        seeds,
        inputs,
        ingest,
        table: summary_table(&report),
        failures: Some((report.failures(), report.records.len())),
    })
}

pub fn simulate(config: &ExperimentConfig, exec: Execution) -> Result<JobOutput> {
    let report = run_experiment_with(config, exec)?;
    let seeds = (0..config.repetitions)
        .map(|r| config.rng_seed.wrapping_add(r as u64))
        .collect();
    batch_output(report, seeds, Vec::new(), None)
}

fn default_iterations() -> usize {
    subdata::exchange::DEFAULT_ALG1_ITERATIONS
}

fn default_start() -> Method {
    Method::Iboss
}

/// Bootstrap over an ingested dataset. Subdata sizes come from `ks` and
/// from `k_per_p` multiplied by the number of covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapJob {
    pub ingest: IngestSpec,
    pub replicates: usize,
    pub methods: Vec<Method>,
    #[serde(default)]
    pub ks: Vec<usize>,
    #[serde(default)]
    pub k_per_p: Vec<usize>,
    #[serde(rename = "K")]
    pub candidates_per_covariate: usize,
    #[serde(default = "default_iterations")]
    pub alg1_iterations: usize,
    #[serde(default = "default_start")]
    pub exchange_seed: Method,
    pub rng_seed: u64,
}

pub fn bootstrap(job: &BootstrapJob, exec: Execution) -> Result<JobOutput> {
    if job.ks.is_empty() && job.k_per_p.is_empty() {
        return Err(CliError::Usage("bootstrap needs `ks` or `k_per_p`".into()).into());
    }
    let (ingested, digest) = load(&job.ingest)?;
    let p = ingested.data.p();
    let ks: Vec<usize> = job
        .ks
        .iter()
        .copied()
        .chain(job.k_per_p.iter().map(|m| m * p))
        .collect();
    let mut records = Vec::new();
    for k in ks {
        let cfg = BootstrapConfig {
            replicates: job.replicates,
            methods: job.methods.clone(),
            k,
            candidates_per_covariate: job.candidates_per_covariate,
            alg1_iterations: job.alg1_iterations,
            exchange_seed: job.exchange_seed,
            rng_seed: job.rng_seed,
        };
        records.extend(bootstrap_mse(&ingested.data, &cfg, exec)?.records);
    }
    let seeds = (0..job.replicates)
        .map(|b| job.rng_seed.wrapping_add(b as u64))
        .collect();
    let summary = IngestReport::from(&ingested);
    batch_output(
        ExperimentReport::from_records(records),
        seeds,
        vec![digest],
        Some(summary),
    )
}

#[derive(Serialize)]
struct GainRow {
    method: Method,
    k: usize,
    #[serde(rename = "K")]
    candidates_per_covariate: usize,
    iterations: usize,
    repetitions: usize,
    mean_pct_increase: f64,
}

#[derive(Serialize)]
struct CellTiming {
    k: usize,
    #[serde(rename = "K")]
    candidates_per_covariate: usize,
    iterations: Vec<usize>,
    mean_seconds: Vec<f64>,
    r_squared: f64,
    valg1_mean_seconds: Option<f64>,
}

pub fn timing(grid: &TimingGrid) -> Result<JobOutput> {
    let table = timing_study(grid)?;
    let mut artifacts = Artifacts::default();
    artifacts.csv(
        "timing.csv",
        table.rows.iter().map(|r| GainRow {
            method: r.method,
            k: r.k,
            candidates_per_covariate: r.candidates_per_covariate,
            iterations: r.iterations,
            repetitions: r.repetitions,
            mean_pct_increase: r.mean_pct_increase,
        }),
    )?;

    let mut cells = Vec::new();
    let mut text = String::new();
    let _ = writeln!(
        text,
        "{:>5} {:>5} {:>8} {:>12} {:>12}",
        "k", "K", "R^2", "max_secs", "gain_%"
    );
    for &k in &grid.ks {
        for &bk in &grid.candidates_per_covariate {
            let rows = table.cell(Method::Alg1, k, bk);
            let xs: Vec<f64> = rows.iter().map(|r| r.iterations as f64).collect();
            let ys: Vec<f64> = rows.iter().map(|r| r.mean_seconds).collect();
            let r2 = if rows.len() > 1 {
                r_squared(&xs, &ys)
            } else {
                f64::NAN
            };
            let last = rows.last().expect("grid is non-empty");
            let _ = writeln!(
                text,
                "{k:>5} {bk:>5} {r2:>8.4} {:>12.4e} {:>12.4}",
                last.mean_seconds, last.mean_pct_increase
            );
            cells.push(CellTiming {
                k,
                candidates_per_covariate: bk,
                iterations: rows.iter().map(|r| r.iterations).collect(),
                mean_seconds: ys,
                r_squared: r2,
                valg1_mean_seconds: table.row(Method::Valg1, k, bk, 1).map(|r| r.mean_seconds),
            });
        }
    }
    Ok(JobOutput {
        artifacts,
        timings: serde_json::json!({ "cells": cells }),
        seeds: (0..grid.repetitions)
            .map(|r| grid.rng_seed.wrapping_add(r as u64))
            .collect(),
        inputs: Vec::new(),
        ingest: None,
        table: text,
        failures: None,
    })
}
