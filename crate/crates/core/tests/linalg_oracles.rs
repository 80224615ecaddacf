mod common;

use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;
use subdata::linalg::{build_moment, covariance_summary, determinant, Direction};
use subdata::{AugmentedRow, MomentState, Selection, SelectionSource};

use common::{dense_moment, random_data, rng};

fn random_spd(r: &mut impl Rng, d: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d + 3, |_, _| r.random_range(-1.0..1.0));
    &a * a.transpose() + DMatrix::identity(d, d) * 0.1
}

fn state_of(m: &DMatrix<f64>) -> MomentState {
    let d = m.nrows();
    let flat: Vec<f64> = (0..d * d).map(|i| m[(i / d, i % d)]).collect();
    MomentState::from_matrix(flat, d, 0).unwrap()
}

/// Laplace expansion along the first row.
fn cofactor_det(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    if n == 1 {
        return m[0][0];
    }
    (0..n)
        .map(|c| {
            let minor: Vec<Vec<f64>> = m[1..]
                .iter()
                .map(|row| {
                    row.iter()
                        .enumerate()
                        .filter(|&(j, _)| j != c)
                        .map(|(_, v)| *v)
                        .collect()
                })
                .collect();
            let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
            sign * m[0][c] * cofactor_det(&minor)
        })
        .sum()
}

#[test]
fn add_matches_refactorization() {
    let mut r = rng(1);
    for _ in 0..200 {
        let d = r.random_range(2..=7);
        let m = random_spd(&mut r, d);
        let z: Vec<f64> = (0..d).map(|_| r.random_range(-2.0..2.0)).collect();
        let st = state_of(&m);
        let mut up = st.clone();
        up.add(&z);
        let zv = DVector::from_vec(z.clone());
        let lemma = (1.0 + (zv.transpose() * m.clone().try_inverse().unwrap() * &zv)[0]).ln();
        let refac = (&m + &zv * zv.transpose()).determinant().ln();
        assert_relative_eq!(up.log_det() - st.log_det(), lemma, max_relative = 1e-8);
        assert_relative_eq!(up.log_det(), refac, max_relative = 1e-8);
    }
}

#[test]
fn trace_inverse_matches_eigenvalues() {
    let mut r = rng(2);
    for _ in 0..200 {
        let d = r.random_range(2..=7);
        let m = random_spd(&mut r, d);
        let eig = m.clone().symmetric_eigen();
        let oracle: f64 = eig.eigenvalues.iter().map(|l| 1.0 / l).sum();
        assert_relative_eq!(state_of(&m).trace_inverse(), oracle, max_relative = 1e-8);
    }
}

#[test]
fn cholesky_determinant_matches_cofactor_expansion() {
    let mut r = rng(3);
    for _ in 0..100 {
        let d = r.random_range(1..=5);
        let m = random_spd(&mut r, d);
        let rows: Vec<Vec<f64>> = (0..d)
            .map(|i| (0..d).map(|j| m[(i, j)]).collect())
            .collect();
        let st = state_of(&m);
        let l = st.chol();
        let prod: f64 = (0..d).map(|j| l[j * d + j].powi(2)).product();
        assert_relative_eq!(prod, cofactor_det(&rows), max_relative = 1e-10);
    }
}

#[test]
fn swap_delta_matches_rebuild() {
    let mut r = rng(4);
    for _ in 0..100 {
        let p = r.random_range(1..=5);
        let k = r.random_range(p + 2..=20);
        let n = k + 5;
        let data = random_data(&mut r, n, p);
        let rows: Vec<usize> = (0..k).collect();
        let sel = Selection::new(rows.clone(), n, SelectionSource::Custom).unwrap();
        let st = build_moment(&data, &sel).unwrap();
        let slot = r.random_range(0..k);
        let incoming = r.random_range(k..n);
        let delta = st.swap_delta_logdet(
            &AugmentedRow::of_row(&data, rows[slot]),
            &AugmentedRow::of_row(&data, incoming),
        );
        let mut swapped = rows.clone();
        swapped[slot] = incoming;
        let oracle = dense_moment(&data, &swapped).determinant().ln()
            - dense_moment(&data, &rows).determinant().ln();
        assert!((delta - oracle).abs() <= 1e-8 * st.log_det().abs().max(1.0));
    }
}

#[test]
fn generalized_variance_identity() {
    let mut r = rng(5);
    for _ in 0..200 {
        let p = r.random_range(1..=6);
        let k = r.random_range(p + 1..=25);
        let data = random_data(&mut r, k, p);
        let sel = Selection::new((0..k).collect(), k, SelectionSource::Custom).unwrap();
        let st = build_moment(&data, &sel).unwrap();
        let cs = covariance_summary(&data, &sel).unwrap();
        let lhs = st.log_det().exp();
        let rhs = (k as f64).powi(p as i32 + 1) * cs.determinant();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-8);
    }
}

#[test]
fn covariance_matches_definition() {
    let mut r = rng(6);
    let data = random_data(&mut r, 30, 4);
    let rows = vec![3, 7, 1, 22, 29, 14, 8];
    let sel = Selection::new(rows.clone(), 30, SelectionSource::Custom).unwrap();
    let cs = covariance_summary(&data, &sel).unwrap();
    let k = rows.len() as f64;
    for o in 0..4 {
        let mo: f64 = rows.iter().map(|&i| data.get(i, o)).sum::<f64>() / k;
        assert!((cs.means[o] - mo).abs() < 1e-12);
        for j in 0..4 {
            let mj: f64 = rows.iter().map(|&i| data.get(i, j)).sum::<f64>() / k;
            let raw: f64 = rows
                .iter()
                .map(|&i| data.get(i, o) * data.get(i, j))
                .sum::<f64>()
                / k;
            assert!((cs.cov[o * 4 + j] - (raw - mo * mj)).abs() < 1e-10);
            assert_eq!(cs.cov[o * 4 + j], cs.cov[j * 4 + o]);
        }
        assert!(cs.cov[o * 4 + o] >= 0.0);
    }
}

#[test]
fn gaussian_determinant_agrees_with_nalgebra() {
    let mut r = rng(7);
    for _ in 0..50 {
        let d = r.random_range(1..=6);
        let m = DMatrix::from_fn(d, d, |_, _| r.random_range(-2.0..2.0));
        let flat: Vec<f64> = (0..d * d).map(|i| m[(i / d, i % d)]).collect();
        assert_relative_eq!(
            determinant(&flat, d),
            m.determinant(),
            epsilon = 1e-9,
            max_relative = 1e-9
        );
    }
}

proptest! {
    #[test]
    fn update_downdate_round_trip(
        seed in any::<u64>(),
        d in 2usize..8,
    ) {
        let mut r = rng(seed);
        let m = random_spd(&mut r, d);
        let st = state_of(&m);
        let z = AugmentedRow::from_covariates(&(1..d).map(|_| r.random_range(-3.0..3.0)).collect::<Vec<_>>());
        let back = st
            .rank_one_update(&z, Direction::Add)
            .and_then(|s| s.rank_one_update(&z, Direction::Remove))
            .unwrap();
        let frob = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        prop_assert!(frob(back.chol(), st.chol()) < 1e-10);
        prop_assert!(frob(back.q(), st.q()) < 1e-10);
        // factor stays consistent with q
        let l = back.chol();
        let mut llt = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                llt[i * d + j] = (0..d).map(|t| l[i * d + t] * l[j * d + t]).sum();
            }
        }
        let qn = back.q().iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!(frob(&llt, back.q()) <= 1e-8 * qn);
    }
}
