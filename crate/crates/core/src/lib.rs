//! Subdata selection for linear regression on large datasets.
//!
//! A size-`k` subsample is seeded (uniform, IBOSS or an OSS-style corner
//! search) and then improved by point exchanges that raise the determinant
//! of the information matrix `Q_sub = sum z_i z_i^T`. Candidate swaps are
//! scored in `O(p^2)` through the Cholesky factor of `Q_sub`.

pub mod data;
pub mod error;
pub mod exchange;
pub mod experiment;
pub mod generate;
pub mod linalg;
pub mod metrics;
pub mod par;
pub mod regression;
pub mod rng;
pub mod seeding;
pub mod selection;

pub use data::{scale_to_unit_cube, DataMatrix, ScalingParams};
pub use error::{Error, Result};
pub use exchange::{
    alg1, candidate_pool, run_exchange, valg1, CandidatePool, ExchangeOptions, ExchangeOutcome,
    ExchangeTrace, Strategy,
};
pub use experiment::{
    bootstrap_mse, run_experiment, run_experiment_with, timing_study, BootstrapConfig,
    ExperimentConfig, ExperimentReport, Method, MethodSettings, RunRecord, TimingGrid, TimingTable,
};
pub use linalg::{build_moment, covariance_summary, AugmentedRow, CovarianceSummary, MomentState};
pub use metrics::{efficiency, hull_2d, mse, EfficiencyReport, Hull, MseReport};
pub use par::Execution;
pub use regression::{adjusted_intercept, gen_response, ols_fit, ModelParams, OlsFit};
pub use selection::{Selection, SelectionSource};
