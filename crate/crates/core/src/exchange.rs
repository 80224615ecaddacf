//! Determinant-maximizing point exchange between the current subdata and a
//! pool of extreme candidate rows.
//!
//! Both strategies walk the selection slot by slot and try the pool in
//! construction order. First-improvement commits the first swap that raises
//! the generalized variance and moves on to the next slot; scan-all keeps
//! scanning after every commit, so each slot ends on the best row it has
//! seen. A committed swap puts the displaced row into the pool position the
//! incoming row vacated.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::linalg::{build_from_rows, SwapEvaluator};
use crate::seeding::{by_column, partial_smallest};
use crate::selection::{Selection, SelectionSource};

/// A swap must raise `log V` by more than this to be accepted.
pub const IMPROVEMENT_TOL: f64 = 1e-12;

/// Paper-recommended defaults.
pub const DEFAULT_ALG1_ITERATIONS: usize = 5;
pub const DEFAULT_CANDIDATES_PER_COVARIATE: usize = 20;

/// Unselected rows eligible for exchange, in construction order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidatePool {
    indices: Vec<usize>,
    per_covariate: usize,
}

impl CandidatePool {
    /// A pool with an explicit order. Rows must be distinct and disjoint
    /// from `sel`.
    pub fn from_indices(indices: Vec<usize>, data: &DataMatrix, sel: &Selection) -> Result<Self> {
        let mut mask = sel.mask(data.n());
        for &i in &indices {
            if i >= data.n() || std::mem::replace(&mut mask[i], true) {
                return Err(Error::InvalidSelection(format!(
                    "pool row {i} is out of range, repeated, or already selected"
                )));
            }
        }
        if indices.is_empty() {
            return Err(Error::EmptyPool);
        }
        Ok(Self {
            indices,
            per_covariate: 0,
        })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// `K`, or 0 for a pool built by [`from_indices`](Self::from_indices).
    pub fn per_covariate(&self) -> usize {
        self.per_covariate
    }
}

/// For every covariate, the `K/2` smallest and then the `K/2` largest
/// unselected rows, each half in ascending order. Rows picked for an earlier
/// covariate stay eligible; repeats are dropped afterwards keeping the first
/// occurrence, so the pool holds at most `K p` rows.
///
/// An odd `K` takes one more row from the low end than from the high end,
/// which keeps the `K p` bound.
pub fn candidate_pool(
    data: &DataMatrix,
    sel: &Selection,
    k_per_cov: usize,
) -> Result<CandidatePool> {
    if k_per_cov < 2 {
        return Err(Error::InvalidCandidateCount(k_per_cov));
    }
    let mask = sel.mask(data.n());
    let remaining: Vec<usize> = (0..data.n()).filter(|&i| !mask[i]).collect();
    if remaining.is_empty() {
        return Err(Error::EmptyPool);
    }
    let low = k_per_cov.div_ceil(2);
    let high = k_per_cov / 2;
    if low > remaining.len() {
        return Err(Error::param(
            "K",
            format!(
                "ceil(K/2) = {low} exceeds the {} unselected rows",
                remaining.len()
            ),
        ));
    }

    let mut pool = Vec::with_capacity(k_per_cov * data.p());
    let mut seen = vec![false; data.n()];
    let mut push = |rows: &[usize], pool: &mut Vec<usize>| {
        for &r in rows {
            if !std::mem::replace(&mut seen[r], true) {
                pool.push(r);
            }
        }
    };
    let mut work = remaining;
    for j in 0..data.p() {
        let asc = by_column(data, j);
        partial_smallest(&mut work, low, &asc);
        push(&work[..low], &mut pool);
        partial_smallest(&mut work, high, |a, b| asc(b, a));
        let mut top = work[..high].to_vec();
        top.reverse();
        push(&top, &mut pool);
    }
    Ok(CandidatePool {
        indices: pool,
        per_covariate: k_per_cov,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Commit the first improving candidate for a slot, then move on (Alg1).
    FirstImprovement,
    /// Commit every improving candidate and keep scanning (VAlg1).
    ScanAll,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExchangeOptions {
    pub strategy: Strategy,
    /// Passes over the slots; only the exchange step is repeated.
    pub iterations: usize,
    /// Stop before `iterations` once a pass commits nothing.
    pub stop_when_stalled: bool,
    /// Also record rejected trial swaps in the trace.
    pub trace_trials: bool,
}

impl ExchangeOptions {
    pub fn alg1(iterations: usize) -> Self {
        Self {
            strategy: Strategy::FirstImprovement,
            iterations,
            stop_when_stalled: false,
            trace_trials: false,
        }
    }

    pub fn valg1() -> Self {
        Self {
            strategy: Strategy::ScanAll,
            iterations: 1,
            stop_when_stalled: false,
            trace_trials: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapRecord {
    pub pass: usize,
    pub slot: usize,
    pub pool_position: usize,
    pub row_out: usize,
    pub row_in: usize,
    pub accepted: bool,
    pub log_v_before: f64,
    /// For a rejected trial, the value the swap would have produced.
    pub log_v_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassSummary {
    pub pass: usize,
    pub accepted: usize,
    pub log_v: f64,
    /// Seconds since the run started, pool construction included.
    pub elapsed_secs: f64,
}

/// What happened during one exchange run. `V` is the generalized variance
/// `det(cov)` of the selected covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExchangeTrace {
    pub strategy: Strategy,
    pub pool_size: usize,
    pub initial_log_v: f64,
    pub final_log_v: f64,
    pub accepted: usize,
    pub records: Vec<SwapRecord>,
    pub passes: Vec<PassSummary>,
    pub elapsed_secs: f64,
}

impl ExchangeTrace {
    pub fn initial_v(&self) -> f64 {
        self.initial_log_v.exp()
    }

    pub fn final_v(&self) -> f64 {
        self.final_log_v.exp()
    }

    pub fn accepted_records(&self) -> impl Iterator<Item = &SwapRecord> {
        self.records.iter().filter(|r| r.accepted)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExchangeOutcome {
    pub selection: Selection,
    pub pool: CandidatePool,
    pub trace: ExchangeTrace,
}

/// Alg1: pool construction followed by `iterations` first-improvement passes.
pub fn alg1(
    data: &DataMatrix,
    seed: &Selection,
    k_per_cov: usize,
    iterations: usize,
) -> Result<(Selection, ExchangeTrace)> {
    let started = Instant::now();
    let pool = candidate_pool(data, seed, k_per_cov)?;
    let out = run_exchange_from(
        data,
        seed,
        pool,
        &ExchangeOptions::alg1(iterations),
        started,
    )?;
    Ok((out.selection, out.trace))
}

/// VAlg1: pool construction followed by a single scan-all pass.
pub fn valg1(
    data: &DataMatrix,
    seed: &Selection,
    k_per_cov: usize,
) -> Result<(Selection, ExchangeTrace)> {
    let started = Instant::now();
    let pool = candidate_pool(data, seed, k_per_cov)?;
    let out = run_exchange_from(data, seed, pool, &ExchangeOptions::valg1(), started)?;
    Ok((out.selection, out.trace))
}

/// Exchange against an already built pool.
pub fn run_exchange(
    data: &DataMatrix,
    seed: &Selection,
    pool: CandidatePool,
    opts: &ExchangeOptions,
) -> Result<ExchangeOutcome> {
    run_exchange_from(data, seed, pool, opts, Instant::now())
}

fn run_exchange_from(
    data: &DataMatrix,
    seed: &Selection,
    pool: CandidatePool,
    opts: &ExchangeOptions,
    started: Instant,
) -> Result<ExchangeOutcome> {
    if opts.iterations == 0 {
        return Err(Error::param("iterations", "must be at least 1"));
    }
    let mut rows = seed.indices().to_vec();
    let mut cands = pool.indices.clone();
    let k = rows.len();
    let dim = data.p() + 1;
    let log_v_offset = dim as f64 * (k as f64).ln();

    let mut state = build_from_rows(data, &rows)?;
    let initial_log_v = state.log_det() - log_v_offset;
    let mut log_v = initial_log_v;

    let mut z_out = vec![0.0; dim];
    let mut z_in = vec![0.0; dim];
    let mut scratch = vec![0.0; dim];
    let mut records = Vec::new();
    let mut passes = Vec::with_capacity(opts.iterations);
    let mut total_accepted = 0;

    for pass in 0..opts.iterations {
        let mut accepted_this_pass = 0;
        for slot in 0..k {
            data.fill_augmented(rows[slot], &mut z_out);
            let mut eval = SwapEvaluator::new(&state, &z_out);
            for w in 0..cands.len() {
                data.fill_augmented(cands[w], &mut z_in);
                let delta = eval.delta(&state, &z_in, &mut scratch);
                if delta > IMPROVEMENT_TOL {
                    let (row_out, row_in) = (rows[slot], cands[w]);
                    state.add(&z_in);
                    std::mem::swap(&mut rows[slot], &mut cands[w]);
                    if state.remove(&z_out).is_err() {
                        state = build_from_rows(data, &rows)?;
                    }
                    let after = state.log_det() - log_v_offset;
                    records.push(SwapRecord {
                        pass,
                        slot,
                        pool_position: w,
                        row_out,
                        row_in,
                        accepted: true,
                        log_v_before: log_v,
                        log_v_after: after,
                    });
                    log_v = after;
                    accepted_this_pass += 1;
                    match opts.strategy {
                        Strategy::FirstImprovement => break,
                        Strategy::ScanAll => {
                            std::mem::swap(&mut z_out, &mut z_in);
                            eval = SwapEvaluator::new(&state, &z_out);
                        }
                    }
                } else if opts.trace_trials {
                    records.push(SwapRecord {
                        pass,
                        slot,
                        pool_position: w,
                        row_out: rows[slot],
                        row_in: cands[w],
                        accepted: false,
                        log_v_before: log_v,
                        log_v_after: log_v + delta,
                    });
                }
            }
        }
        if accepted_this_pass > 0 {
            state.refresh(data, &rows)?;
            log_v = state.log_det() - log_v_offset;
        }
        total_accepted += accepted_this_pass;
        passes.push(PassSummary {
            pass,
            accepted: accepted_this_pass,
            log_v,
            elapsed_secs: started.elapsed().as_secs_f64(),
        });
        if opts.stop_when_stalled && accepted_this_pass == 0 {
            break;
        }
    }

    let trace = ExchangeTrace {
        strategy: opts.strategy,
        pool_size: cands.len(),
        initial_log_v,
        final_log_v: log_v,
        accepted: total_accepted,
        records,
        passes,
        elapsed_secs: started.elapsed().as_secs_f64(),
    };
    Ok(ExchangeOutcome {
        selection: Selection::from_trusted(rows, SelectionSource::Custom),
        pool: CandidatePool {
            indices: cands,
            per_covariate: pool.per_covariate,
        },
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn col(values: &[f64]) -> DataMatrix {
        DataMatrix::new(values.len(), 1, values.to_vec()).unwrap()
    }

    fn sel(idx: &[usize], n: usize) -> Selection {
        Selection::new(idx.to_vec(), n, SelectionSource::Custom).unwrap()
    }

    #[test]
    fn pool_single_covariate() {
        // rows 0 and 1 are selected; the rest hold 5, 1, 9, 3, 7
        let data = col(&[0.0, 0.0, 5.0, 1.0, 9.0, 3.0, 7.0]);
        let pool = candidate_pool(&data, &sel(&[0, 1], 7), 2).unwrap();
        assert_eq!(pool.indices(), &[3, 4]);
    }

    #[test]
    fn pool_deduplicates_across_covariates() {
        // row 2 is both the largest x1 and the smallest x2
        let data =
            DataMatrix::from_rows(&[[0.0, 0.0], [-3.0, 1.0], [4.0, -6.0], [0.5, 5.0], [0.2, 0.3]])
                .unwrap();
        let pool = candidate_pool(&data, &sel(&[0], 5), 2).unwrap();
        assert_eq!(pool.indices(), &[1, 2, 3]);
        assert!(pool.len() < 2 * data.p());
    }

    #[test]
    fn pool_exhausts_remaining_rows() {
        let data = col(&[0.0, 0.1, 5.0, 1.0, 9.0, 3.0, 7.0]);
        let pool = candidate_pool(&data, &sel(&[0, 1], 7), 10).unwrap();
        let mut rows = pool.indices().to_vec();
        rows.sort_unstable();
        assert_eq!(rows, vec![2, 3, 4, 5, 6]);
    }

    #[test]
    fn pool_top_half_is_ascending() {
        let data = col(&[0.0, 5.0, 1.0, 9.0, 3.0, 7.0]);
        let pool = candidate_pool(&data, &sel(&[0], 6), 4).unwrap();
        // smallest two ascending (1, 3), then largest two ascending (7, 9)
        assert_eq!(pool.indices(), &[2, 4, 5, 3]);
    }

    #[test]
    fn odd_k_takes_the_extra_row_from_the_low_end() {
        let data = col(&[0.0, 5.0, 1.0, 9.0, 3.0, 7.0]);
        let pool = candidate_pool(&data, &sel(&[0], 6), 3).unwrap();
        assert_eq!(pool.indices(), &[2, 4, 3]);
        let two = DataMatrix::new(6, 2, vec![0.0; 12]).unwrap();
        assert!(candidate_pool(&two, &sel(&[0], 6), 25).is_err());
    }

    #[test]
    fn pool_rejects_bad_k() {
        let data = col(&[0.0, 1.0, 2.0, 3.0]);
        let s = sel(&[0], 4);
        assert_eq!(
            candidate_pool(&data, &s, 1),
            Err(Error::InvalidCandidateCount(1))
        );
        assert_eq!(
            candidate_pool(&data, &s, 0),
            Err(Error::InvalidCandidateCount(0))
        );
        assert!(candidate_pool(&data, &s, 8).is_err());
        let all = sel(&[0, 1, 2, 3], 4);
        assert_eq!(candidate_pool(&data, &all, 2), Err(Error::EmptyPool));
    }

    fn five_point() -> (DataMatrix, Selection) {
        (col(&[0.1, 0.2, -5.0, 5.0, 0.3]), sel(&[0, 1], 5))
    }

    #[test]
    fn alg1_variance_chain() {
        let (data, seed) = five_point();
        let opts = ExchangeOptions {
            trace_trials: true,
            ..ExchangeOptions::alg1(1)
        };
        let pool = candidate_pool(&data, &seed, 2).unwrap();
        assert_eq!(pool.indices(), &[2, 3]);
        let out = run_exchange(&data, &seed, pool, &opts).unwrap();
        assert_eq!(out.selection.indices(), &[2, 3]);
        let tr = &out.trace;
        assert_relative_eq!(tr.initial_v(), 0.0025, max_relative = 1e-10);
        assert_relative_eq!(tr.final_v(), 25.0, max_relative = 1e-12);
        let steps: Vec<(usize, usize, bool, f64)> = tr
            .records
            .iter()
            .map(|r| (r.slot, r.pool_position, r.accepted, r.log_v_after.exp()))
            .collect();
        assert_eq!(steps.len(), 3);
        assert_eq!((steps[0].0, steps[0].1, steps[0].2), (0, 0, true));
        assert_relative_eq!(steps[0].3, 6.76, max_relative = 1e-10);
        assert_eq!((steps[1].0, steps[1].1, steps[1].2), (1, 0, false));
        assert_relative_eq!(steps[1].3, 6.5025, max_relative = 1e-10);
        assert_eq!((steps[2].0, steps[2].1, steps[2].2), (1, 1, true));
        assert_relative_eq!(steps[2].3, 25.0, max_relative = 1e-10);
        // displaced rows end up in the pool slots they vacated
        assert_eq!(out.pool.indices(), &[0, 1]);
    }

    #[test]
    fn alg1_second_iteration_is_idle() {
        let (data, seed) = five_point();
        let (s, tr) = alg1(&data, &seed, 2, 2).unwrap();
        assert_eq!(s.indices(), &[2, 3]);
        assert_eq!(tr.passes.len(), 2);
        assert_eq!(tr.passes[0].accepted, 2);
        assert_eq!(tr.passes[1].accepted, 0);
    }

    #[test]
    fn stop_when_stalled_cuts_passes() {
        let (data, seed) = five_point();
        let pool = candidate_pool(&data, &seed, 2).unwrap();
        let opts = ExchangeOptions {
            stop_when_stalled: true,
            ..ExchangeOptions::alg1(10)
        };
        let out = run_exchange(&data, &seed, pool, &opts).unwrap();
        assert_eq!(out.trace.passes.len(), 2);
    }

    #[test]
    fn valg1_reaches_same_optimum() {
        let (data, seed) = five_point();
        let (s, tr) = valg1(&data, &seed, 2).unwrap();
        let mut rows = s.indices().to_vec();
        rows.sort_unstable();
        assert_eq!(rows, vec![2, 3]);
        assert_relative_eq!(tr.final_v(), 25.0, max_relative = 1e-12);
    }

    #[test]
    fn fixed_point_is_untouched() {
        let data = col(&[-5.0, 5.0, 0.1, 0.2, 0.3]);
        let seed = sel(&[0, 1], 5);
        let (s, tr) = alg1(&data, &seed, 2, 3).unwrap();
        assert_eq!(s.indices(), seed.indices());
        assert_eq!(tr.accepted, 0);
        assert_eq!(tr.initial_log_v, tr.final_log_v);
    }

    #[test]
    fn singular_seed_propagates() {
        let data = col(&[1.0, 1.0, 2.0, 3.0]);
        assert_eq!(
            alg1(&data, &sel(&[0, 1], 4), 2, 1).unwrap_err(),
            Error::Singular
        );
    }

    #[test]
    fn zero_iterations_rejected() {
        let (data, seed) = five_point();
        assert!(alg1(&data, &seed, 2, 0).is_err());
    }
}
