//! Synthetic covariates: equicorrelated Gaussian rows, optionally with a
//! block of mean-shifted outliers at the end.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::rng::{seeded, stream};

/// Rows i.i.d. `N(0, (1 - rho) I + rho J)`, drawn as
/// `x = sqrt(1 - rho) g + sqrt(rho) g0 1` with a shared scalar `g0` per row.
pub fn gen_mvn_equicorr(n: usize, p: usize, rho: f64, rng_seed: u64) -> Result<DataMatrix> {
    gen_outlier_scenario(n, p, 0, &[], rho, rng_seed)
}

/// As [`gen_mvn_equicorr`], with the last `count` rows shifted by `mean_shift`.
pub fn gen_outlier_scenario(
    n: usize,
    p: usize,
    count: usize,
    mean_shift: &[f64],
    rho: f64,
    rng_seed: u64,
) -> Result<DataMatrix> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::param("rho", format!("{rho} is outside [0, 1)")));
    }
    if count > n {
        return Err(Error::param(
            "outliers.count",
            format!("{count} exceeds n = {n}"),
        ));
    }
    if count > 0 && mean_shift.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: mean_shift.len(),
        });
    }
    let own = (1.0 - rho).sqrt();
    let shared = rho.sqrt();
    let mut rng = seeded(rng_seed, stream::COVARIATES);
    let mut values = Vec::with_capacity(n * p);
    for i in 0..n {
        let g0: f64 = rng.sample(StandardNormal);
        let shifted = i >= n - count;
        for j in 0..p {
            let g: f64 = rng.sample(StandardNormal);
            let mut x = own * g + shared * g0;
            if shifted {
                x += mean_shift[j];
            }
            values.push(x);
        }
    }
    DataMatrix::new(n, p, values)
}
