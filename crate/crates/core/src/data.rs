//! Dense covariate storage and the affine scaling used by the OSS-style seed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `n x p` covariates stored row-major, plus an optional response vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    n: usize,
    p: usize,
    values: Vec<f64>,
    response: Option<Vec<f64>>,
}

impl DataMatrix {
    pub fn new(n: usize, p: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * p {
            return Err(Error::DimensionMismatch {
                expected: n * p,
                found: values.len(),
            });
        }
        if p == 0 {
            return Err(Error::param("p", "at least one covariate is required"));
        }
        Ok(Self {
            n,
            p,
            values,
            response: None,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let p = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut values = Vec::with_capacity(rows.len() * p);
        for row in rows {
            let row = row.as_ref();
            if row.len() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    found: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Self::new(rows.len(), p, values)
    }

    pub fn with_response(mut self, response: Vec<f64>) -> Result<Self> {
        if response.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: response.len(),
            });
        }
        self.response = Some(response);
        Ok(self)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.p..(i + 1) * self.p]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.p + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.p)
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.values[j..].iter().step_by(self.p).copied()
    }

    pub fn response(&self) -> Option<&[f64]> {
        self.response.as_deref()
    }

    pub fn require_response(&self) -> Result<&[f64]> {
        self.response().ok_or(Error::MissingResponse)
    }

    /// Writes `z_i = (1, x_i)` into `out`, which must have length `p + 1`.
    #[inline]
    pub fn fill_augmented(&self, i: usize, out: &mut [f64]) {
        out[0] = 1.0;
        out[1..].copy_from_slice(self.row(i));
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut means = vec![0.0; self.p];
        for row in self.rows() {
            for (m, x) in means.iter_mut().zip(row) {
                *m += x;
            }
        }
        let n = self.n as f64;
        means.iter_mut().for_each(|m| *m /= n);
        means
    }

    /// Rows `indices` (in order, repeats allowed) as a new matrix. The
    /// response is carried along when present.
    pub fn gather(&self, indices: &[usize]) -> Self {
        let mut values = Vec::with_capacity(indices.len() * self.p);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Self {
            n: indices.len(),
            p: self.p,
            values,
            response: self
                .response
                .as_ref()
                .map(|y| indices.iter().map(|&i| y[i]).collect()),
        }
    }

    /// Covariates restricted to the columns in `cols`, response dropped.
    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        if let Some(&bad) = cols.iter().find(|&&c| c >= self.p) {
            return Err(Error::param(
                "columns",
                format!("column {bad} out of range"),
            ));
        }
        let mut values = Vec::with_capacity(self.n * cols.len());
        for row in self.rows() {
            values.extend(cols.iter().map(|&c| row[c]));
        }
        Self::new(self.n, cols.len(), values)
    }
}

/// Per-column extrema used to map covariates onto `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl ScalingParams {
    pub fn fit(data: &DataMatrix) -> Result<Self> {
        if data.n() < 2 {
            return Err(Error::param("n", "scaling needs at least two rows"));
        }
        let mut min = vec![f64::INFINITY; data.p()];
        let mut max = vec![f64::NEG_INFINITY; data.p()];
        for row in data.rows() {
            for j in 0..row.len() {
                min[j] = min[j].min(row[j]);
                max[j] = max[j].max(row[j]);
            }
        }
        if let Some(j) = (0..data.p()).find(|&j| max[j] <= min[j]) {
            return Err(Error::ConstantColumn(j));
        }
        Ok(Self { min, max })
    }

    pub fn apply(&self, data: &DataMatrix) -> Result<DataMatrix> {
        self.map(data, |x, lo, hi| 2.0 * (x - lo) / (hi - lo) - 1.0)
    }

    pub fn invert(&self, data: &DataMatrix) -> Result<DataMatrix> {
        self.map(data, |u, lo, hi| lo + (u + 1.0) * (hi - lo) / 2.0)
    }

    fn map(&self, data: &DataMatrix, f: impl Fn(f64, f64, f64) -> f64) -> Result<DataMatrix> {
        if data.p() != self.min.len() {
            return Err(Error::DimensionMismatch {
                expected: self.min.len(),
                found: data.p(),
            });
        }
        let p = data.p();
        let values = data
            .values()
            .iter()
            .enumerate()
            .map(|(idx, &x)| {
                let j = idx % p;
                f(x, self.min[j], self.max[j])
            })
            .collect();
        let mut out = DataMatrix::new(data.n(), p, values)?;
        out.response = data.response.clone();
        Ok(out)
    }
}

/// Maps every column affinely so that its minimum lands on -1 and its maximum on +1.
pub fn scale_to_unit_cube(data: &DataMatrix) -> Result<(DataMatrix, ScalingParams)> {
    let params = ScalingParams::fit(data)?;
    Ok((params.apply(data)?, params))
}
