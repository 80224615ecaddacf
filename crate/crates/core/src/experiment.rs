//! Replicated simulation, bootstrap and timing harnesses.
//!
//! Repetition `r` draws everything from seed `rng_seed + r`, so results do
//! not depend on how repetitions are scheduled across threads.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{scale_to_unit_cube, DataMatrix};
use crate::error::{Error, Result};
use crate::exchange::{alg1, valg1, ExchangeTrace, DEFAULT_ALG1_ITERATIONS};
use crate::generate::gen_outlier_scenario;
use crate::metrics::{efficiency, mse};
use crate::par::{map_range, Execution};
use crate::regression::{adjusted_intercept, gen_response, ols_fit, ols_full, ModelParams};
use crate::rng::{seeded, stream};
use crate::seeding::{iboss_seed, oss_seed_with, uniform_seed, OssOptions};
use crate::selection::Selection;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Uniform,
    Iboss,
    Oss,
    Alg1,
    Valg1,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Uniform,
        Method::Iboss,
        Method::Oss,
        Method::Alg1,
        Method::Valg1,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Uniform => "uniform",
            Method::Iboss => "iboss",
            Method::Oss => "oss",
            Method::Alg1 => "alg1",
            Method::Valg1 => "valg1",
        }
    }

    pub fn is_exchange(self) -> bool {
        matches!(self, Method::Alg1 | Method::Valg1)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::param("method", format!("unknown method `{s}`")))
    }
}

/// Everything a method needs besides the data.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSettings {
    pub k: usize,
    pub candidates_per_covariate: usize,
    pub alg1_iterations: usize,
    /// Starting selection for the exchange methods.
    pub exchange_seed: Method,
    pub oss: OssOptions,
}

impl MethodSettings {
    pub fn iterations_for(&self, method: Method) -> usize {
        match method {
            Method::Alg1 => self.alg1_iterations,
            Method::Valg1 => 1,
            _ => 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.exchange_seed.is_exchange() {
            return Err(Error::param(
                "exchange_seed",
                "must be one of uniform, iboss, oss",
            ));
        }
        let big_k = self.candidates_per_covariate;
        if big_k < 2 {
            return Err(Error::param("K", format!("{big_k} is below 2")));
        }
        if self.alg1_iterations == 0 {
            return Err(Error::param("alg1_iterations", "must be at least 1"));
        }
        Ok(())
    }
}

/// A selection together with how it was produced.
#[derive(Debug, Clone)]
pub struct SelectionRun {
    pub method: Method,
    pub selection: Selection,
    pub trace: Option<ExchangeTrace>,
    /// Wall time including the seed for exchange methods.
    pub seconds: f64,
}

/// Runs each requested method once, computing every starting selection at
/// most once. `scaled` must be `data` mapped onto `[-1, 1]^p`.
pub fn select_methods(
    data: &DataMatrix,
    scaled: &DataMatrix,
    methods: &[Method],
    settings: &MethodSettings,
    rng_seed: u64,
) -> Vec<(Method, Result<SelectionRun>)> {
    let mut seeds: HashMap<Method, Result<(Selection, f64)>> = HashMap::new();
    let mut seed_of = |m: Method| -> Result<(Selection, f64)> {
        seeds
            .entry(m)
            .or_insert_with(|| {
                let t = Instant::now();
                let sel = match m {
                    Method::Uniform => uniform_seed(data, settings.k, rng_seed),
                    Method::Iboss => iboss_seed(data, settings.k),
                    Method::Oss => oss_seed_with(scaled, settings.k, &settings.oss),
                    Method::Alg1 | Method::Valg1 => unreachable!("exchange methods are not seeds"),
                };
                sel.map(|s| (s, t.elapsed().as_secs_f64()))
            })
            .clone()
    };
    methods
        .iter()
        .map(|&m| {
            let run = (|| {
                if !m.is_exchange() {
                    let (selection, seconds) = seed_of(m)?;
                    return Ok(SelectionRun {
                        method: m,
                        selection,
                        trace: None,
                        seconds,
                    });
                }
                let (seed, seed_secs) = seed_of(settings.exchange_seed)?;
                let t = Instant::now();
                let (selection, trace) = match m {
                    Method::Alg1 => alg1(
                        data,
                        &seed,
                        settings.candidates_per_covariate,
                        settings.alg1_iterations,
                    )?,
                    _ => valg1(data, &seed, settings.candidates_per_covariate)?,
                };
                Ok(SelectionRun {
                    method: m,
                    selection,
                    trace: Some(trace),
                    seconds: seed_secs + t.elapsed().as_secs_f64(),
                })
            })();
            (m, run)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierSpec {
    pub count: usize,
    pub mean_shift: Vec<f64>,
}

fn default_rho() -> f64 {
    0.5
}
fn default_iterations() -> usize {
    DEFAULT_ALG1_ITERATIONS
}
fn default_seed_method() -> Method {
    Method::Oss
}
fn default_beta0() -> f64 {
    1.0
}
fn default_sigma2() -> f64 {
    3.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub p: usize,
    pub k: usize,
    #[serde(rename = "K")]
    pub candidates_per_covariate: usize,
    #[serde(default = "default_rho")]
    pub rho: f64,
    pub repetitions: usize,
    #[serde(default = "default_iterations")]
    pub alg1_iterations: usize,
    pub methods: Vec<Method>,
    pub rng_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outliers: Option<OutlierSpec>,
    #[serde(default = "default_seed_method")]
    pub exchange_seed: Method,
    #[serde(default = "default_beta0")]
    pub beta0: f64,
    /// Defaults to all ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta1: Option<Vec<f64>>,
    #[serde(default = "default_sigma2")]
    pub sigma2: f64,
}

impl ExperimentConfig {
    /// Evaluation setting with `n` rows: `p = 10`, `k = 100`, `K = 25`,
    /// equicorrelation 0.5, five Alg1 passes, OSS starting point.
    pub fn evaluation_preset(n: usize, repetitions: usize, rng_seed: u64) -> Self {
        Self {
            n,
            p: 10,
            k: 100,
            candidates_per_covariate: 25,
            rho: 0.5,
            repetitions,
            alg1_iterations: DEFAULT_ALG1_ITERATIONS,
            methods: Method::ALL[1..].to_vec(),
            rng_seed,
            outliers: None,
            exchange_seed: Method::Oss,
            beta0: 1.0,
            beta1: None,
            sigma2: 3.0,
        }
    }

    pub fn settings(&self) -> MethodSettings {
        MethodSettings {
            k: self.k,
            candidates_per_covariate: self.candidates_per_covariate,
            alg1_iterations: self.alg1_iterations,
            exchange_seed: self.exchange_seed,
            oss: OssOptions::default(),
        }
    }

    pub fn model(&self) -> Result<ModelParams> {
        let beta1 = self.beta1.clone().unwrap_or_else(|| vec![1.0; self.p]);
        ModelParams::new(self.beta0, beta1, self.sigma2)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::param("p", "must be at least 1"));
        }
        if self.k > self.n {
            return Err(Error::param(
                "k",
                format!("{} exceeds n = {}", self.k, self.n),
            ));
        }
        if self.k < self.p + 1 {
            return Err(Error::param(
                "k",
                format!("must be at least p + 1 = {}", self.p + 1),
            ));
        }
        if self.repetitions == 0 {
            return Err(Error::param("repetitions", "must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(Error::param("methods", "at least one method is required"));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::param(
                "rho",
                format!("{} is outside [0, 1)", self.rho),
            ));
        }
        if let Some(o) = &self.outliers {
            if o.count > self.n {
                return Err(Error::param("outliers.count", "exceeds n"));
            }
            if o.mean_shift.len() != self.p {
                return Err(Error::param(
                    "outliers.mean_shift",
                    format!("needs {} entries", self.p),
                ));
            }
        }
        if let Some(b) = &self.beta1 {
            if b.len() != self.p {
                return Err(Error::param("beta1", format!("needs {} entries", self.p)));
            }
        }
        self.model()?;
        self.settings().validate()
    }
}

/// One method on one repetition. Metrics are NaN when `error` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: Method,
    pub repetition: usize,
    pub seed: u64,
    pub n: usize,
    pub k: usize,
    #[serde(rename = "K")]
    pub candidates_per_covariate: usize,
    pub iterations: usize,
    pub mse_intercept: f64,
    pub mse_slopes: f64,
    pub gen_variance: f64,
    pub d_eff: f64,
    pub a_eff: f64,
    pub log_det_q: f64,
    pub accepted_swaps: usize,
    /// Selected rows drawn from the shifted component, if any.
    pub outliers_selected: usize,
    pub seconds: f64,
    pub error: Option<String>,
    pub selection: Vec<usize>,
}

impl RunRecord {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub median: f64,
    pub q05: f64,
    pub q95: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self {
                mean: f64::NAN,
                median: f64::NAN,
                q05: f64::NAN,
                q95: f64::NAN,
            };
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Self {
            mean: values.iter().sum::<f64>() / values.len() as f64,
            median: quantile(&sorted, 0.5),
            q05: quantile(&sorted, 0.05),
            q95: quantile(&sorted, 0.95),
        }
    }
}

/// Linear interpolation between order statistics of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub n: usize,
    pub k: usize,
    pub records: usize,
    pub failures: usize,
    pub mse_intercept: Stat,
    pub mse_slopes: Stat,
    pub d_eff: Stat,
    pub a_eff: Stat,
    pub gen_variance: Stat,
    pub seconds: Stat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub records: Vec<RunRecord>,
    pub summaries: Vec<MethodSummary>,
}

impl ExperimentReport {
    pub fn from_records(records: Vec<RunRecord>) -> Self {
        let mut keys: Vec<(Method, usize, usize)> = Vec::new();
        for r in &records {
            let key = (r.method, r.n, r.k);
            if !keys.contains(&key) {
                keys.push(key);
            }
        }
        let summaries = keys
            .into_iter()
            .map(|(method, n, k)| {
                let group: Vec<&RunRecord> = records
                    .iter()
                    .filter(|r| r.method == method && r.n == n && r.k == k)
                    .collect();
                let ok: Vec<&RunRecord> = group.iter().copied().filter(|r| r.ok()).collect();
                let stat = |f: fn(&RunRecord) -> f64| {
                    Stat::of(&ok.iter().map(|r| f(r)).collect::<Vec<_>>())
                };
                MethodSummary {
                    method,
                    n,
                    k,
                    records: group.len(),
                    failures: group.len() - ok.len(),
                    mse_intercept: stat(|r| r.mse_intercept),
                    mse_slopes: stat(|r| r.mse_slopes),
                    d_eff: stat(|r| r.d_eff),
                    a_eff: stat(|r| r.a_eff),
                    gen_variance: stat(|r| r.gen_variance),
                    seconds: stat(|r| r.seconds),
                }
            })
            .collect();
        Self { records, summaries }
    }

    pub fn summary(&self, method: Method) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.method == method)
    }

    /// Records of one method ordered by repetition.
    pub fn of_method(&self, method: Method) -> Vec<&RunRecord> {
        let mut out: Vec<&RunRecord> = self.records.iter().filter(|r| r.method == method).collect();
        out.sort_by_key(|r| (r.k, r.repetition));
        out
    }

    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| !r.ok()).count()
    }
}

/// Shared tail of the simulation and bootstrap pipelines: select with every
/// method, fit on the subdata, score against `beta_true`.
struct Evaluation<'a> {
    data: &'a DataMatrix,
    beta_true: &'a [f64],
    settings: &'a MethodSettings,
    methods: &'a [Method],
    seed: u64,
    repetition: usize,
    outlier_start: Option<usize>,
}

impl Evaluation<'_> {
    fn run(&self) -> Vec<RunRecord> {
        let base = |method: Method| RunRecord {
            method,
            repetition: self.repetition,
            seed: self.seed,
            n: self.data.n(),
            k: self.settings.k,
            candidates_per_covariate: self.settings.candidates_per_covariate,
            iterations: self.settings.iterations_for(method),
            mse_intercept: f64::NAN,
            mse_slopes: f64::NAN,
            gen_variance: f64::NAN,
            d_eff: f64::NAN,
            a_eff: f64::NAN,
            log_det_q: f64::NAN,
            accepted_swaps: 0,
            outliers_selected: 0,
            seconds: f64::NAN,
            error: None,
            selection: Vec::new(),
        };
        let scaled = match scale_to_unit_cube(self.data) {
            Ok((s, _)) => s,
            Err(e) => {
                return self
                    .methods
                    .iter()
                    .map(|&m| RunRecord {
                        error: Some(e.to_string()),
                        ..base(m)
                    })
                    .collect()
            }
        };
        let y_bar = {
            let y = self.data.response().unwrap_or(&[]);
            y.iter().sum::<f64>() / y.len() as f64
        };
        let x_bar = self.data.column_means();

        select_methods(self.data, &scaled, self.methods, self.settings, self.seed)
            .into_iter()
            .map(|(m, run)| {
                let mut rec = base(m);
                let scored = run.and_then(|run| {
                    let fit = ols_fit(self.data, &run.selection)?;
                    let mut beta_hat = fit.coefficients.clone();
                    beta_hat[0] = adjusted_intercept(y_bar, &x_bar, fit.slopes())?;
                    let err = mse(&beta_hat, self.beta_true)?;
                    let eff = efficiency(&scaled, &run.selection)?;
                    Ok((run, err, eff))
                });
                match scored {
                    Ok((run, err, eff)) => {
                        rec.mse_intercept = err.mse_intercept;
                        rec.mse_slopes = err.mse_slopes;
                        rec.gen_variance = eff.gen_variance;
                        rec.d_eff = eff.d_eff;
                        rec.a_eff = eff.a_eff;
                        rec.log_det_q = eff.log_det_q;
                        rec.accepted_swaps = run.trace.as_ref().map_or(0, |t| t.accepted);
                        rec.outliers_selected = self.outlier_start.map_or(0, |start| {
                            run.selection
                                .indices()
                                .iter()
                                .filter(|&&i| i >= start)
                                .count()
                        });
                        rec.seconds = run.seconds;
                        rec.selection = run.selection.into_indices();
                    }
                    Err(e) => rec.error = Some(e.to_string()),
                }
                rec
            })
            .collect()
    }
}

/// Covariates and responses of one simulation repetition.
pub fn simulate_dataset(config: &ExperimentConfig, repetition: usize) -> Result<DataMatrix> {
    let seed = config.rng_seed.wrapping_add(repetition as u64);
    let (count, shift) = config
        .outliers
        .as_ref()
        .map_or((0, &[][..]), |o| (o.count, &o.mean_shift[..]));
    let x = gen_outlier_scenario(config.n, config.p, count, shift, config.rho, seed)?;
    let y = gen_response(&x, &config.model()?, seed)?;
    x.with_response(y)
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_experiment_with(config, Execution::default())
}

pub fn run_experiment_with(config: &ExperimentConfig, exec: Execution) -> Result<ExperimentReport> {
    config.validate()?;
    let settings = config.settings();
    let beta_true = config.model()?.coefficients();
    let outlier_start = config
        .outliers
        .as_ref()
        .filter(|o| o.count > 0)
        .map(|o| config.n - o.count);
    let per_rep = map_range(config.repetitions, exec, |r| {
        let seed = config.rng_seed.wrapping_add(r as u64);
        match simulate_dataset(config, r) {
            Ok(data) => Evaluation {
                data: &data,
                beta_true: &beta_true,
                settings: &settings,
                methods: &config.methods,
                seed,
                repetition: r,
                outlier_start,
            }
            .run(),
            Err(e) => vec![RunRecord {
                method: config.methods[0],
                repetition: r,
                seed,
                n: config.n,
                k: config.k,
                candidates_per_covariate: config.candidates_per_covariate,
                iterations: 0,
                mse_intercept: f64::NAN,
                mse_slopes: f64::NAN,
                gen_variance: f64::NAN,
                d_eff: f64::NAN,
                a_eff: f64::NAN,
                log_det_q: f64::NAN,
                accepted_swaps: 0,
                outliers_selected: 0,
                seconds: f64::NAN,
                error: Some(e.to_string()),
                selection: Vec::new(),
            }],
        }
    });
    Ok(ExperimentReport::from_records(
        per_rep.into_iter().flatten().collect(),
    ))
}

fn default_bootstrap_seed() -> Method {
    Method::Iboss
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapConfig {
    /// Number of bootstrap resamples `B`.
    pub replicates: usize,
    pub methods: Vec<Method>,
    pub k: usize,
    #[serde(rename = "K")]
    pub candidates_per_covariate: usize,
    #[serde(default = "default_iterations")]
    pub alg1_iterations: usize,
    #[serde(default = "default_bootstrap_seed")]
    pub exchange_seed: Method,
    pub rng_seed: u64,
}

impl BootstrapConfig {
    pub fn settings(&self) -> MethodSettings {
        MethodSettings {
            k: self.k,
            candidates_per_covariate: self.candidates_per_covariate,
            alg1_iterations: self.alg1_iterations,
            exchange_seed: self.exchange_seed,
            oss: OssOptions::default(),
        }
    }

    pub fn validate(&self, data: &DataMatrix) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::param("replicates", "must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(Error::param("methods", "at least one method is required"));
        }
        if self.k > data.n() {
            return Err(Error::param(
                "k",
                format!("{} exceeds n = {}", self.k, data.n()),
            ));
        }
        if self.k < data.p() + 1 {
            return Err(Error::param(
                "k",
                format!("must be at least p + 1 = {}", data.p() + 1),
            ));
        }
        self.settings().validate()
    }
}

/// Bootstrap MSE: each resample draws `n` rows with replacement, every method
/// selects and fits on it, and the estimate is scored against the OLS fit
/// of the original full data.
pub fn bootstrap_mse(
    data: &DataMatrix,
    config: &BootstrapConfig,
    exec: Execution,
) -> Result<ExperimentReport> {
    config.validate(data)?;
    data.require_response()?;
    let reference = ols_full(data)?.coefficients;
    let settings = config.settings();
    let n = data.n();
    let per_rep = map_range(config.replicates, exec, |b| {
        let seed = config.rng_seed.wrapping_add(b as u64);
        let mut rng = seeded(seed, stream::RESAMPLE);
        let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let resample = data.gather(&rows);
        Evaluation {
            data: &resample,
            beta_true: &reference,
            settings: &settings,
            methods: &config.methods,
            seed,
            repetition: b,
            outlier_start: None,
        }
        .run()
    });
    Ok(ExperimentReport::from_records(
        per_rep.into_iter().flatten().collect(),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingGrid {
    pub n: usize,
    pub p: usize,
    #[serde(default = "default_rho")]
    pub rho: f64,
    pub ks: Vec<usize>,
    #[serde(rename = "Ks")]
    pub candidates_per_covariate: Vec<usize>,
    pub iterations: Vec<usize>,
    pub repetitions: usize,
    pub rng_seed: u64,
    #[serde(default = "default_true")]
    pub include_valg1: bool,
}

fn default_true() -> bool {
    true
}

impl TimingGrid {
    pub fn validate(&self) -> Result<()> {
        if self.ks.is_empty()
            || self.candidates_per_covariate.is_empty()
            || self.iterations.is_empty()
        {
            return Err(Error::param(
                "grid",
                "ks, Ks and iterations must be non-empty",
            ));
        }
        if self.iterations.contains(&0) {
            return Err(Error::param("iterations", "entries must be at least 1"));
        }
        if self.repetitions == 0 {
            return Err(Error::param("repetitions", "must be at least 1"));
        }
        if let Some(&k) = self.ks.iter().find(|&&k| k > self.n || k < self.p + 1) {
            return Err(Error::param("ks", format!("{k} must lie in [p + 1, n]")));
        }
        if let Some(&bk) = self.candidates_per_covariate.iter().find(|&&bk| bk < 2) {
            return Err(Error::param("Ks", format!("{bk} is below 2")));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::param("rho", "outside [0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub method: Method,
    pub k: usize,
    #[serde(rename = "K")]
    pub candidates_per_covariate: usize,
    pub iterations: usize,
    pub repetitions: usize,
    pub mean_seconds: f64,
    /// Mean of `100 (V_t / V_seed - 1)`.
    pub mean_pct_increase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingTable {
    pub rows: Vec<TimingRow>,
}

impl TimingTable {
    pub fn cell(&self, method: Method, k: usize, big_k: usize) -> Vec<&TimingRow> {
        self.rows
            .iter()
            .filter(|r| r.method == method && r.k == k && r.candidates_per_covariate == big_k)
            .collect()
    }

    pub fn row(
        &self,
        method: Method,
        k: usize,
        big_k: usize,
        iterations: usize,
    ) -> Option<&TimingRow> {
        self.cell(method, k, big_k)
            .into_iter()
            .find(|r| r.iterations == iterations)
    }
}

/// Mean Alg1 wall time and variance gain per `(k, K, iterations)` cell,
/// starting from the OSS seed (seed time excluded). A `t`-pass run is the
/// first `t` passes of the longest run, so each repetition runs Alg1 once
/// and reads the per-pass checkpoints. Repetitions run sequentially to keep
/// the clock readings clean.
pub fn timing_study(grid: &TimingGrid) -> Result<TimingTable> {
    grid.validate()?;
    let max_iter = *grid.iterations.iter().max().unwrap();
    let cells: Vec<(usize, usize)> = grid
        .ks
        .iter()
        .flat_map(|&k| grid.candidates_per_covariate.iter().map(move |&bk| (k, bk)))
        .collect();
    let ni = grid.iterations.len();
    let mut alg_secs = vec![vec![0.0; ni]; cells.len()];
    let mut alg_gain = vec![vec![0.0; ni]; cells.len()];
    let mut v_secs = vec![0.0; cells.len()];
    let mut v_gain = vec![0.0; cells.len()];

    for r in 0..grid.repetitions {
        let seed = grid.rng_seed.wrapping_add(r as u64);
        let data = crate::generate::gen_mvn_equicorr(grid.n, grid.p, grid.rho, seed)?;
        let (scaled, _) = scale_to_unit_cube(&data)?;
        for (c, &(k, bk)) in cells.iter().enumerate() {
            let start = oss_seed_with(&scaled, k, &OssOptions::default())?;
            let (_, trace) = alg1(&data, &start, bk, max_iter)?;
            for (slot, &it) in grid.iterations.iter().enumerate() {
                let pass = &trace.passes[it - 1];
                alg_secs[c][slot] += pass.elapsed_secs;
                alg_gain[c][slot] += pct_increase(trace.initial_log_v, pass.log_v);
            }
            if grid.include_valg1 {
                let (_, trace) = valg1(&data, &start, bk)?;
                v_secs[c] += trace.elapsed_secs;
                v_gain[c] += pct_increase(trace.initial_log_v, trace.final_log_v);
            }
        }
    }

    let reps = grid.repetitions as f64;
    let mut rows = Vec::new();
    for (c, &(k, bk)) in cells.iter().enumerate() {
        for (slot, &it) in grid.iterations.iter().enumerate() {
            rows.push(TimingRow {
                method: Method::Alg1,
                k,
                candidates_per_covariate: bk,
                iterations: it,
                repetitions: grid.repetitions,
                mean_seconds: alg_secs[c][slot] / reps,
                mean_pct_increase: alg_gain[c][slot] / reps,
            });
        }
        if grid.include_valg1 {
            rows.push(TimingRow {
                method: Method::Valg1,
                k,
                candidates_per_covariate: bk,
                iterations: 1,
                repetitions: grid.repetitions,
                mean_seconds: v_secs[c] / reps,
                mean_pct_increase: v_gain[c] / reps,
            });
        }
    }
    Ok(TimingTable { rows })
}

fn pct_increase(log_v0: f64, log_v: f64) -> f64 {
    100.0 * (log_v - log_v0).exp_m1()
}

/// Coefficient of determination of the least-squares line through `(x, y)`.
pub fn r_squared(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if syy == 0.0 {
        return 1.0;
    }
    sxy * sxy / (sxx * syy)
}
