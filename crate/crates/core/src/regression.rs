//! Least squares on the subdata and the full-data-adjusted intercept.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::linalg::build_from_rows;
use crate::rng::{seeded, stream};
use crate::selection::Selection;

/// `y = beta0 + x' beta1 + eps`, `eps ~ N(0, sigma2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub beta0: f64,
    pub beta1: Vec<f64>,
    pub sigma2: f64,
}

impl ModelParams {
    pub fn new(beta0: f64, beta1: Vec<f64>, sigma2: f64) -> Result<Self> {
        if !(sigma2 >= 0.0) || !sigma2.is_finite() {
            return Err(Error::param("sigma2", "must be finite and non-negative"));
        }
        Ok(Self {
            beta0,
            beta1,
            sigma2,
        })
    }

    /// All coefficients equal to one, the simulation default.
    pub fn ones(p: usize, sigma2: f64) -> Self {
        Self {
            beta0: 1.0,
            beta1: vec![1.0; p],
            sigma2,
        }
    }

    /// `(beta0, beta1...)`.
    pub fn coefficients(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.beta1.len() + 1);
        out.push(self.beta0);
        out.extend_from_slice(&self.beta1);
        out
    }
}

/// Fitted `(intercept, slopes...)` from the selected rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
}

impl OlsFit {
    pub fn intercept(&self) -> f64 {
        self.coefficients[0]
    }

    pub fn slopes(&self) -> &[f64] {
        &self.coefficients[1..]
    }
}

/// Solves the normal equations of the selected rows through the Cholesky
/// factor of `Q_sub`.
pub fn ols_fit(data: &DataMatrix, sel: &Selection) -> Result<OlsFit> {
    ols_on_rows(data, sel.indices())
}

/// Least squares over every row.
pub fn ols_full(data: &DataMatrix) -> Result<OlsFit> {
    let rows: Vec<usize> = (0..data.n()).collect();
    ols_on_rows(data, &rows)
}

fn ols_on_rows(data: &DataMatrix, rows: &[usize]) -> Result<OlsFit> {
    let y = data.require_response()?;
    let dim = data.p() + 1;
    if rows.len() < dim {
        return Err(Error::Singular);
    }
    let state = build_from_rows(data, rows)?;
    let mut rhs = vec![0.0; dim];
    for &i in rows {
        rhs[0] += y[i];
        for (r, x) in rhs[1..].iter_mut().zip(data.row(i)) {
            *r += x * y[i];
        }
    }
    Ok(OlsFit {
        coefficients: state.solve(&rhs)?,
    })
}

/// `y_bar - x_bar' beta1`, with both means taken over the full data.
pub fn adjusted_intercept(y_bar: f64, x_bar: &[f64], slopes: &[f64]) -> Result<f64> {
    if x_bar.len() != slopes.len() {
        return Err(Error::DimensionMismatch {
            expected: x_bar.len(),
            found: slopes.len(),
        });
    }
    Ok(y_bar - x_bar.iter().zip(slopes).map(|(x, b)| x * b).sum::<f64>())
}

pub fn gen_response(data: &DataMatrix, params: &ModelParams, rng_seed: u64) -> Result<Vec<f64>> {
    if params.beta1.len() != data.p() {
        return Err(Error::DimensionMismatch {
            expected: data.p(),
            found: params.beta1.len(),
        });
    }
    let mut rng = seeded(rng_seed, stream::RESPONSE);
    let noise = Normal::new(0.0, params.sigma2.sqrt())
        .map_err(|e| Error::param("sigma2", e.to_string()))?;
    Ok(data
        .rows()
        .map(|x| {
            let mean = params.beta0 + x.iter().zip(&params.beta1).map(|(a, b)| a * b).sum::<f64>();
            if params.sigma2 > 0.0 {
                mean + noise.sample(&mut rng)
            } else {
                mean
            }
        })
        .collect())
}
