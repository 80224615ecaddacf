#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use subdata::rng::seeded;
use subdata::DataMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    seeded(seed, 99)
}

pub fn random_data(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DataMatrix {
    let values = (0..n * p).map(|_| rng.random_range(-3.0..3.0)).collect();
    DataMatrix::new(n, p, values).unwrap()
}

/// `sum z z^T` over `rows`, built directly with nalgebra.
pub fn dense_moment(data: &DataMatrix, rows: &[usize]) -> DMatrix<f64> {
    let d = data.p() + 1;
    let mut q = DMatrix::zeros(d, d);
    for &i in rows {
        let mut z = vec![1.0];
        z.extend_from_slice(data.row(i));
        let z = nalgebra::DVector::from_vec(z);
        q += &z * z.transpose();
    }
    q
}

pub fn log_v_dense(data: &DataMatrix, rows: &[usize]) -> f64 {
    let d = (data.p() + 1) as f64;
    let det = dense_moment(data, rows).determinant();
    if det <= 0.0 {
        return f64::NEG_INFINITY;
    }
    det.ln() - d * (rows.len() as f64).ln()
}

pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}
