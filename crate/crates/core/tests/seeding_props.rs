mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::Rng;
use subdata::metrics::contains;
use subdata::seeding::{
    iboss_counts, iboss_seed, oss_seed, oss_seed_with, uniform_seed, OssOptions,
};
use subdata::{efficiency, hull_2d, DataMatrix, Execution};

use common::{random_data, rng};

fn argmin_argmax(data: &DataMatrix, j: usize) -> (usize, usize) {
    let col: Vec<f64> = data.column(j).collect();
    let lo = (0..col.len())
        .min_by(|&a, &b| col[a].total_cmp(&col[b]).then(a.cmp(&b)))
        .unwrap();
    let hi = (0..col.len())
        .max_by(|&a, &b| col[a].total_cmp(&col[b]).then(b.cmp(&a)))
        .unwrap();
    (lo, hi)
}

#[test]
fn iboss_counts_conserve_k() {
    for p in 1..8 {
        for k in 0..60 {
            let c = iboss_counts(k, p);
            assert_eq!(c.len(), p);
            assert_eq!(c.iter().map(|(a, b)| a + b).sum::<usize>(), k);
            let all: Vec<usize> = c.iter().flat_map(|&(a, b)| [a, b]).collect();
            assert!(all.iter().max().unwrap() - all.iter().min().unwrap() <= 1);
        }
    }
}

#[test]
fn factorial_corners_reach_full_efficiency() {
    for p in [2usize, 3] {
        let k = 1 << p;
        let mut r = rng(20 + p as u64);
        let mut rows: Vec<Vec<f64>> = (0..k)
            .map(|c| {
                (0..p)
                    .map(|j| if c >> j & 1 == 1 { 1.0 } else { -1.0 })
                    .collect()
            })
            .collect();
        for _ in 0..200 {
            rows.push((0..p).map(|_| r.random_range(-0.9..0.9)).collect());
        }
        let data = DataMatrix::from_rows(&rows).unwrap();
        let sel = oss_seed(&data, k).unwrap();
        let picked: BTreeSet<usize> = sel.indices().iter().copied().collect();
        assert_eq!(picked, (0..k).collect());
        let eff = efficiency(&data, &sel).unwrap();
        assert!((eff.d_eff - 1.0).abs() < 1e-10);
        assert!((eff.a_eff - 1.0).abs() < 1e-10);
    }
}

#[test]
fn oss_parallel_matches_sequential() {
    let mut r = rng(21);
    let data = random_data(&mut r, 20_000, 3);
    let seq = oss_seed_with(
        &data,
        40,
        &OssOptions {
            prune_fraction: None,
            execution: Execution::Sequential,
        },
    )
    .unwrap();
    let par = oss_seed_with(
        &data,
        40,
        &OssOptions {
            prune_fraction: None,
            execution: Execution::Parallel,
        },
    )
    .unwrap();
    assert_eq!(seq.indices(), par.indices());
}

#[test]
fn selection_hull_lies_inside_data_hull() {
    let mut r = rng(22);
    for _ in 0..30 {
        let data = random_data(&mut r, 300, 2);
        let pts: Vec<(f64, f64)> = data.rows().map(|x| (x[0], x[1])).collect();
        let full = hull_2d(&pts);
        for sel in [oss_seed(&data, 8).unwrap(), iboss_seed(&data, 8).unwrap()] {
            let sub: Vec<(f64, f64)> = sel.indices().iter().map(|&i| pts[i]).collect();
            let h = hull_2d(&sub);
            assert!(h
                .vertices
                .iter()
                .all(|&v| contains(&full.vertices, v, 1e-12)));
            assert!(h.area <= full.area + 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn iboss_keeps_extremes_of_first_covariate(seed in any::<u64>(), p in 1usize..5, k_mult in 1usize..5) {
        let mut r = rng(seed);
        let data = random_data(&mut r, 200, p);
        let k = 2 * p * k_mult;
        let sel = iboss_seed(&data, k).unwrap();
        let (lo, hi) = argmin_argmax(&data, 0);
        prop_assert!(sel.indices().contains(&lo));
        prop_assert!(sel.indices().contains(&hi));
        let distinct: BTreeSet<usize> = sel.indices().iter().copied().collect();
        prop_assert_eq!(distinct.len(), k);
    }

    #[test]
    fn iboss_is_invariant_to_positive_affine_maps(
        seed in any::<u64>(),
        a in 0.01f64..100.0,
        b in -50.0f64..50.0,
    ) {
        let mut r = rng(seed);
        let data = random_data(&mut r, 150, 3);
        let moved = DataMatrix::new(150, 3, data.values().iter().map(|x| a * x + b).collect()).unwrap();
        prop_assert_eq!(iboss_seed(&data, 18).unwrap().into_indices(), iboss_seed(&moved, 18).unwrap().into_indices());
    }

    #[test]
    fn seeds_have_k_distinct_rows(seed in any::<u64>(), k in 3usize..40) {
        let mut r = rng(seed);
        let data = random_data(&mut r, 80, 2);
        for sel in [uniform_seed(&data, k, seed).unwrap(), iboss_seed(&data, k).unwrap(), oss_seed(&data, k).unwrap()] {
            let distinct: BTreeSet<usize> = sel.indices().iter().copied().collect();
            prop_assert_eq!(distinct.len(), k);
            prop_assert!(sel.indices().iter().all(|&i| i < 80));
        }
    }

    #[test]
    fn uniform_seed_is_reproducible(seed in any::<u64>()) {
        let mut r = rng(seed);
        let data = random_data(&mut r, 500, 2);
        prop_assert_eq!(uniform_seed(&data, 30, seed).unwrap(), uniform_seed(&data, 30, seed).unwrap());
    }
}
