//! Initial subdata: uniform sampling, IBOSS extreme-value selection and an
//! OSS-style greedy corner selection.

use std::cmp::Ordering;

use crate::data::{DataMatrix, ScalingParams};
use crate::error::{Error, Result};
use crate::par::Execution;
use crate::rng::{seeded, stream};
use crate::selection::{Selection, SelectionSource};

fn check_size(data: &DataMatrix, k: usize) -> Result<()> {
    if k > data.n() {
        return Err(Error::SubsetTooLarge { k, n: data.n() });
    }
    Ok(())
}

/// `k` rows drawn without replacement.
pub fn uniform_seed(data: &DataMatrix, k: usize, rng_seed: u64) -> Result<Selection> {
    check_size(data, k)?;
    let mut rng = seeded(rng_seed, stream::UNIFORM);
    let indices = rand::seq::index::sample(&mut rng, data.n(), k).into_vec();
    Ok(Selection::from_trusted(indices, SelectionSource::Uniform))
}

/// Orders rows by `(x_j, row)`; ties fall back on the row index.
#[inline]
pub(crate) fn by_column(data: &DataMatrix, j: usize) -> impl Fn(&usize, &usize) -> Ordering + '_ {
    move |&a, &b| data.get(a, j).total_cmp(&data.get(b, j)).then(a.cmp(&b))
}

/// Moves the `r` smallest elements under `cmp` to the front of `rows`, sorted.
pub(crate) fn partial_smallest<F>(rows: &mut [usize], r: usize, cmp: F)
where
    F: Fn(&usize, &usize) -> Ordering,
{
    if r == 0 {
        return;
    }
    if r < rows.len() {
        rows.select_nth_unstable_by(r - 1, &cmp);
    }
    rows[..r].sort_unstable_by(&cmp);
}

/// Number of rows taken at the (min, max) end of each covariate: `k / 2p`
/// each, with the remainder handed out one per extreme starting from the
/// minimum of covariate 0.
pub fn iboss_counts(k: usize, p: usize) -> Vec<(usize, usize)> {
    let base = k / (2 * p);
    let mut rem = k - base * 2 * p;
    let mut take = || {
        let extra = usize::from(rem > 0);
        rem -= extra;
        base + extra
    };
    (0..p)
        .map(|_| {
            let lo = take();
            let hi = take();
            (lo, hi)
        })
        .collect()
}

/// IBOSS: for each covariate in turn, the rows with the smallest and largest
/// values among those not yet taken.
pub fn iboss_seed(data: &DataMatrix, k: usize) -> Result<Selection> {
    check_size(data, k)?;
    let mut available: Vec<usize> = (0..data.n()).collect();
    let mut chosen = Vec::with_capacity(k);
    for (j, (lo, hi)) in iboss_counts(k, data.p()).into_iter().enumerate() {
        let asc = by_column(data, j);
        partial_smallest(&mut available, lo, &asc);
        chosen.extend(available.drain(..lo));
        partial_smallest(&mut available, hi, |a, b| asc(b, a));
        chosen.extend(available.drain(..hi));
    }
    Ok(Selection::from_trusted(chosen, SelectionSource::Iboss))
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OssOptions {
    /// After each addition drop this fraction of the remaining candidates
    /// with the smallest norm. `None` keeps every row in play.
    pub prune_fraction: Option<f64>,
    pub execution: Execution,
}

pub fn oss_seed(data: &DataMatrix, k: usize) -> Result<Selection> {
    oss_seed_with(data, k, &OssOptions::default())
}

/// Greedy sequential selection on the covariates mapped to `[-1, 1]^p`.
///
/// The first row maximizes `||x||^2`. Each further row minimizes
/// `L(x | S) = sum_{s in S} (p - ||x||^2/2 - ||s||^2/2 + m(x, s))^2`, where
/// `m` counts coordinates whose signs agree. Every term is non-negative on
/// the unit cube and vanishes only for a pair of opposite corners, so the
/// loss rewards rows far from the center whose sign pattern differs from
/// what is already selected. Ties go to the lower row index.
pub fn oss_seed_with(data: &DataMatrix, k: usize, opts: &OssOptions) -> Result<Selection> {
    check_size(data, k)?;
    if let Some(f) = opts.prune_fraction {
        if !(0.0..1.0).contains(&f) {
            return Err(Error::param("prune_fraction", "must lie in [0, 1)"));
        }
    }
    if k == 0 {
        return Ok(Selection::from_trusted(Vec::new(), SelectionSource::Oss));
    }
    let scaled = to_unit_cube(data)?;
    let p = scaled.p();
    let norms: Vec<f64> = scaled
        .rows()
        .map(|r| r.iter().map(|v| v * v).sum())
        .collect();
    let signs: Vec<i8> = scaled.values().iter().map(|&v| sign(v)).collect();

    let first = (0..scaled.n())
        .max_by(|&a, &b| norms[a].total_cmp(&norms[b]).then(b.cmp(&a)))
        .expect("non-empty data");
    let mut chosen = vec![first];
    let mut candidates: Vec<usize> = (0..scaled.n()).filter(|&i| i != first).collect();
    let mut loss = vec![0.0; candidates.len()];
    let pf = p as f64;

    while chosen.len() < k {
        let s = *chosen.last().unwrap();
        let s_signs = &signs[s * p..(s + 1) * p];
        let half_s = norms[s] / 2.0;
        let term = |i: usize| {
            let matches = signs[i * p..(i + 1) * p]
                .iter()
                .zip(s_signs)
                .filter(|(a, b)| a == b)
                .count() as f64;
            let t = pf - norms[i] / 2.0 - half_s + matches;
            t * t
        };
        let pos = accumulate_and_argmin(&candidates, &mut loss, term, opts.execution);
        chosen.push(candidates.remove(pos));
        loss.remove(pos);

        if let Some(frac) = opts.prune_fraction {
            let needed = k - chosen.len();
            let drop = ((candidates.len() as f64) * frac) as usize;
            let drop = drop.min(candidates.len().saturating_sub(needed));
            if drop > 0 {
                prune_smallest_norms(&mut candidates, &mut loss, &norms, drop);
            }
        }
    }
    Ok(Selection::from_trusted(chosen, SelectionSource::Oss))
}

/// Adds `term(row)` to every candidate's loss and returns the position of
/// the minimum, lowest row index first on ties.
fn accumulate_and_argmin<F>(
    candidates: &[usize],
    loss: &mut [f64],
    term: F,
    exec: Execution,
) -> usize
where
    F: Fn(usize) -> f64 + Sync,
{
    let better = |a: (usize, f64), b: (usize, f64)| match a.1.total_cmp(&b.1) {
        Ordering::Less => a,
        Ordering::Greater => b,
        Ordering::Equal if candidates[a.0] <= candidates[b.0] => a,
        Ordering::Equal => b,
    };

    #[cfg(feature = "parallel")]
    if exec.is_parallel() && candidates.len() >= 1 << 14 {
        use rayon::prelude::*;
        return loss
            .par_iter_mut()
            .zip(candidates.par_iter())
            .enumerate()
            .map(|(pos, (l, &i))| {
                *l += term(i);
                (pos, *l)
            })
            .reduce(
                || (usize::MAX, f64::INFINITY),
                |a, b| {
                    if a.0 == usize::MAX {
                        b
                    } else if b.0 == usize::MAX {
                        a
                    } else {
                        better(a, b)
                    }
                },
            )
            .0;
    }
    let _ = exec;
    let mut best = (0, f64::INFINITY);
    for (pos, (l, &i)) in loss.iter_mut().zip(candidates).enumerate() {
        *l += term(i);
        if pos == 0 {
            best = (0, *l);
        } else {
            best = better(best, (pos, *l));
        }
    }
    best.0
}

fn prune_smallest_norms(
    candidates: &mut Vec<usize>,
    loss: &mut Vec<f64>,
    norms: &[f64],
    drop: usize,
) {
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    partial_smallest(&mut order, drop, |&a, &b| {
        norms[candidates[a]]
            .total_cmp(&norms[candidates[b]])
            .then(candidates[a].cmp(&candidates[b]))
    });
    let mut keep = vec![true; candidates.len()];
    for &pos in &order[..drop] {
        keep[pos] = false;
    }
    let mut it = keep.iter();
    candidates.retain(|_| *it.next().unwrap());
    let mut it = keep.iter();
    loss.retain(|_| *it.next().unwrap());
}

/// Columns already spanning exactly `[-1, 1]` are left bit-for-bit intact.
fn to_unit_cube(data: &DataMatrix) -> Result<DataMatrix> {
    let params = ScalingParams::fit(data)?;
    let untouched: Vec<bool> = (0..data.p())
        .map(|j| params.min[j] == -1.0 && params.max[j] == 1.0)
        .collect();
    if untouched.iter().all(|&u| u) {
        return Ok(data.clone());
    }
    let scaled = params.apply(data)?;
    if untouched.iter().any(|&u| u) {
        // mixed case: copy the exact columns back
        let p = data.p();
        let values = scaled
            .values()
            .iter()
            .zip(data.values())
            .enumerate()
            .map(|(idx, (&s, &x))| if untouched[idx % p] { x } else { s })
            .collect();
        return DataMatrix::new(data.n(), p, values);
    }
    Ok(scaled)
}

#[inline]
fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}
