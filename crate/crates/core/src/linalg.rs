//! Dense SPD machinery for the subdata information matrix
//! `Q_sub = sum_{i in S} z_i z_i^T`, `z_i = (1, x_i)`.
//!
//! All determinants are carried on the log scale. The unknown error variance
//! only rescales `Q_sub` by a positive constant, so it is fixed to one.

use std::ops::Deref;

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::selection::Selection;

/// A pivot is treated as zero once it drops below this fraction of the
/// corresponding diagonal entry.
const PIVOT_RTOL: f64 = 1e-12;

/// Determinant ratios of a trial swap at or below this are treated as a
/// singular swapped matrix. Such a swap could never be an improvement.
const SWAP_RATIO_FLOOR: f64 = 1e-12;

/// `z = (1, x)`; the leading entry is exactly one.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedRow(Vec<f64>);

impl AugmentedRow {
    pub fn from_covariates(x: &[f64]) -> Self {
        let mut v = Vec::with_capacity(x.len() + 1);
        v.push(1.0);
        v.extend_from_slice(x);
        Self(v)
    }

    pub fn of_row(data: &DataMatrix, i: usize) -> Self {
        Self::from_covariates(data.row(i))
    }
}

impl Deref for AugmentedRow {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Add,
    Remove,
}

/// `Q_sub` together with its lower Cholesky factor and log-determinant.
///
/// Matrices are `dim x dim`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentState {
    dim: usize,
    q: Vec<f64>,
    chol: Vec<f64>,
    log_det: f64,
    count: usize,
}

impl MomentState {
    /// Factors an explicit symmetric positive-definite matrix.
    pub fn from_matrix(q: Vec<f64>, dim: usize, count: usize) -> Result<Self> {
        if q.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: q.len(),
            });
        }
        let chol = cholesky(&q, dim)?;
        let log_det = log_det_of_factor(&chol, dim);
        Ok(Self {
            dim,
            q,
            chol,
            log_det,
            count,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn chol(&self) -> &[f64] {
        &self.chol
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// `trace(Q^{-1}) = ||L^{-1}||_F^2`, which equals the sum of the
    /// eigenvalues of `Q^{-1}`.
    pub fn trace_inverse(&self) -> f64 {
        let d = self.dim;
        let mut col = vec![0.0; d];
        let mut total = 0.0;
        for c in 0..d {
            col.iter_mut().for_each(|v| *v = 0.0);
            col[c] = 1.0;
            forward_solve_in_place(&self.chol, d, &mut col);
            total += col[c..].iter().map(|v| v * v).sum::<f64>();
        }
        total
    }

    /// Solves `Q x = rhs`.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: rhs.len(),
            });
        }
        let mut x = rhs.to_vec();
        forward_solve_in_place(&self.chol, self.dim, &mut x);
        backward_solve_transpose_in_place(&self.chol, self.dim, &mut x);
        Ok(x)
    }

    /// `Q <- Q + z z^T`, with the factor updated by Givens rotations.
    pub fn add(&mut self, z: &[f64]) {
        debug_assert_eq!(z.len(), self.dim);
        let d = self.dim;
        let mut v = z.to_vec();
        for j in 0..d {
            let ljj = self.chol[j * d + j];
            let r = ljj.hypot(v[j]);
            let c = r / ljj;
            let s = v[j] / ljj;
            self.chol[j * d + j] = r;
            for i in j + 1..d {
                let lij = (self.chol[i * d + j] + s * v[i]) / c;
                self.chol[i * d + j] = lij;
                v[i] = c * v[i] - s * lij;
            }
        }
        self.rank_one_q(z, 1.0);
        self.count += 1;
        self.log_det = log_det_of_factor(&self.chol, d);
    }

    /// `Q <- Q - z z^T`, with the factor downdated by hyperbolic rotations.
    /// The state is left untouched when the result would not be positive
    /// definite.
    pub fn remove(&mut self, z: &[f64]) -> Result<()> {
        debug_assert_eq!(z.len(), self.dim);
        let d = self.dim;
        let mut chol = self.chol.clone();
        let mut v = z.to_vec();
        for j in 0..d {
            let ljj = chol[j * d + j];
            let r2 = (ljj - v[j]) * (ljj + v[j]);
            if !(r2 > PIVOT_RTOL * ljj * ljj) {
                return Err(Error::DowndateNotPositiveDefinite);
            }
            let r = r2.sqrt();
            let c = r / ljj;
            let s = v[j] / ljj;
            chol[j * d + j] = r;
            for i in j + 1..d {
                let lij = (chol[i * d + j] - s * v[i]) / c;
                chol[i * d + j] = lij;
                v[i] = c * v[i] - s * lij;
            }
        }
        self.chol = chol;
        self.rank_one_q(z, -1.0);
        self.count = self.count.saturating_sub(1);
        self.log_det = log_det_of_factor(&self.chol, d);
        Ok(())
    }

    /// Non-mutating form of [`add`](Self::add) / [`remove`](Self::remove).
    pub fn rank_one_update(&self, z: &AugmentedRow, direction: Direction) -> Result<Self> {
        let mut next = self.clone();
        match direction {
            Direction::Add => next.add(z),
            Direction::Remove => next.remove(z)?,
        }
        Ok(next)
    }

    /// `log det(Q - u u^T + v v^T) - log det(Q)` without touching the state.
    ///
    /// Removing `u` and then adding `v` through the determinant lemma twice
    /// composes to the ratio `(1 - u'Q⁻¹u)(1 + v'Q⁻¹v) + (u'Q⁻¹v)^2`. A
    /// non-positive ratio means the swapped matrix is singular, reported as
    /// negative infinity.
    pub fn swap_delta_logdet(&self, z_out: &[f64], z_in: &[f64]) -> f64 {
        if z_out == z_in {
            return 0.0;
        }
        let eval = SwapEvaluator::new(self, z_out);
        let mut scratch = vec![0.0; self.dim];
        eval.delta(self, z_in, &mut scratch)
    }

    /// Refactors from scratch, discarding rounding drift accumulated by
    /// repeated updates.
    pub(crate) fn refresh(&mut self, data: &DataMatrix, rows: &[usize]) -> Result<()> {
        *self = build_from_rows(data, rows)?;
        Ok(())
    }

    fn rank_one_q(&mut self, z: &[f64], sign: f64) {
        let d = self.dim;
        for i in 0..d {
            let zi = sign * z[i];
            let row = &mut self.q[i * d..(i + 1) * d];
            for (q, zj) in row.iter_mut().zip(z) {
                *q += zi * zj;
            }
        }
    }
}

/// Precomputes `w_out = L^{-1} z_out` so that each trial swap against the
/// same outgoing row costs one triangular solve.
pub(crate) struct SwapEvaluator {
    w_out: Vec<f64>,
    lev_out: f64,
}

impl SwapEvaluator {
    pub(crate) fn new(state: &MomentState, z_out: &[f64]) -> Self {
        let mut w_out = z_out.to_vec();
        forward_solve_in_place(&state.chol, state.dim, &mut w_out);
        let lev_out = dot(&w_out, &w_out);
        Self { w_out, lev_out }
    }

    pub(crate) fn delta(&self, state: &MomentState, z_in: &[f64], scratch: &mut [f64]) -> f64 {
        scratch.copy_from_slice(z_in);
        forward_solve_in_place(&state.chol, state.dim, scratch);
        let lev_in = dot(scratch, scratch);
        let cross = dot(scratch, &self.w_out);
        let ratio = (1.0 - self.lev_out) * (1.0 + lev_in) + cross * cross;
        if ratio > SWAP_RATIO_FLOOR {
            ratio.ln()
        } else {
            f64::NEG_INFINITY
        }
    }
}

/// Assembles `Q_sub` over the selected rows and factors it.
pub fn build_moment(data: &DataMatrix, sel: &Selection) -> Result<MomentState> {
    if sel.is_empty() {
        return Err(Error::InvalidSelection("empty selection".into()));
    }
    build_from_rows(data, sel.indices())
}

pub(crate) fn build_from_rows(data: &DataMatrix, rows: &[usize]) -> Result<MomentState> {
    let d = data.p() + 1;
    let mut q = vec![0.0; d * d];
    let mut z = vec![0.0; d];
    for &i in rows {
        data.fill_augmented(i, &mut z);
        for a in 0..d {
            let za = z[a];
            for b in 0..=a {
                q[a * d + b] += za * z[b];
            }
        }
    }
    for a in 0..d {
        for b in 0..a {
            q[b * d + a] = q[a * d + b];
        }
    }
    MomentState::from_matrix(q, d, rows.len())
}

/// Lower Cholesky factor of a symmetric matrix, or [`Error::Singular`] when a
/// pivot collapses.
pub fn cholesky(a: &[f64], dim: usize) -> Result<Vec<f64>> {
    let mut l = vec![0.0; dim * dim];
    for j in 0..dim {
        let ajj = a[j * dim + j];
        let pivot = ajj - dot(&l[j * dim..j * dim + j], &l[j * dim..j * dim + j]);
        if !(pivot > PIVOT_RTOL * ajj.abs()) {
            return Err(Error::Singular);
        }
        let ljj = pivot.sqrt();
        l[j * dim + j] = ljj;
        for i in j + 1..dim {
            let s = a[i * dim + j] - dot(&l[i * dim..i * dim + j], &l[j * dim..j * dim + j]);
            l[i * dim + j] = s / ljj;
        }
    }
    Ok(l)
}

fn log_det_of_factor(l: &[f64], dim: usize) -> f64 {
    2.0 * (0..dim).map(|j| l[j * dim + j].ln()).sum::<f64>()
}

pub(crate) fn forward_solve_in_place(l: &[f64], dim: usize, b: &mut [f64]) {
    for i in 0..dim {
        let s = b[i] - dot(&l[i * dim..i * dim + i], &b[..i]);
        b[i] = s / l[i * dim + i];
    }
}

fn backward_solve_transpose_in_place(l: &[f64], dim: usize, b: &mut [f64]) {
    for i in (0..dim).rev() {
        let mut s = b[i];
        for k in i + 1..dim {
            s -= l[k * dim + i] * b[k];
        }
        b[i] = s / l[i * dim + i];
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Sample means and covariance (divisor `k`) of the selected covariates.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceSummary {
    pub means: Vec<f64>,
    /// `p x p`, row-major.
    pub cov: Vec<f64>,
}

impl CovarianceSummary {
    pub fn p(&self) -> usize {
        self.means.len()
    }

    /// The generalized variance `det(cov)`.
    pub fn determinant(&self) -> f64 {
        determinant(&self.cov, self.p())
    }
}

pub fn covariance_summary(data: &DataMatrix, sel: &Selection) -> Result<CovarianceSummary> {
    if sel.len() < 2 {
        return Err(Error::InvalidSelection(
            "covariance needs at least two rows".into(),
        ));
    }
    let p = data.p();
    let k = sel.len() as f64;
    let mut means = vec![0.0; p];
    for &i in sel.indices() {
        for (m, x) in means.iter_mut().zip(data.row(i)) {
            *m += x;
        }
    }
    means.iter_mut().for_each(|m| *m /= k);
    let mut cov = vec![0.0; p * p];
    let mut dev = vec![0.0; p];
    for &i in sel.indices() {
        for ((d, x), m) in dev.iter_mut().zip(data.row(i)).zip(&means) {
            *d = x - m;
        }
        for a in 0..p {
            for b in 0..p {
                cov[a * p + b] += dev[a] * dev[b];
            }
        }
    }
    cov.iter_mut().for_each(|c| *c /= k);
    Ok(CovarianceSummary { means, cov })
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn determinant(a: &[f64], dim: usize) -> f64 {
    let mut m = a.to_vec();
    let mut det = 1.0;
    for c in 0..dim {
        let piv = (c..dim)
            .max_by(|&x, &y| m[x * dim + c].abs().total_cmp(&m[y * dim + c].abs()))
            .unwrap();
        if m[piv * dim + c] == 0.0 {
            return 0.0;
        }
        if piv != c {
            for j in 0..dim {
                m.swap(piv * dim + j, c * dim + j);
            }
            det = -det;
        }
        let pv = m[c * dim + c];
        det *= pv;
        for r in c + 1..dim {
            let f = m[r * dim + c] / pv;
            if f != 0.0 {
                for j in c..dim {
                    m[r * dim + j] -= f * m[c * dim + j];
                }
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selection::SelectionSource;
    use approx::assert_relative_eq;

    fn sel(idx: &[usize], n: usize) -> Selection {
        Selection::new(idx.to_vec(), n, SelectionSource::Custom).unwrap()
    }

    fn factorial_2() -> DataMatrix {
        DataMatrix::from_rows(&[[-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0], [1.0, 1.0]]).unwrap()
    }

    #[test]
    fn symmetric_pair() {
        let data = DataMatrix::from_rows(&[[1.0], [-1.0]]).unwrap();
        let st = build_moment(&data, &sel(&[0, 1], 2)).unwrap();
        assert_eq!(st.q(), &[2.0, 0.0, 0.0, 2.0]);
        assert_relative_eq!(st.log_det(), 4f64.ln(), epsilon = 1e-15);
        assert_eq!(st.count(), 2);
    }

    #[test]
    fn single_row_is_singular() {
        let data = DataMatrix::from_rows(&[[0.0], [3.0]]).unwrap();
        assert_eq!(build_moment(&data, &sel(&[0], 2)), Err(Error::Singular));
    }

    #[test]
    fn repeated_point_is_singular() {
        let data = DataMatrix::from_rows(&[[1.0], [1.0]]).unwrap();
        assert_eq!(build_moment(&data, &sel(&[0, 1], 2)), Err(Error::Singular));
    }

    #[test]
    fn full_factorial_moment() {
        let st = build_moment(&factorial_2(), &sel(&[0, 1, 2, 3], 4)).unwrap();
        let mut expected = vec![0.0; 9];
        for i in 0..3 {
            expected[i * 3 + i] = 4.0;
        }
        assert_eq!(st.q(), expected.as_slice());
        assert_relative_eq!(st.log_det(), 3.0 * 4f64.ln(), epsilon = 1e-14);
        assert_relative_eq!(st.trace_inverse(), 0.75, epsilon = 1e-15);
    }

    #[test]
    fn trace_inverse_of_diagonal() {
        let st = MomentState::from_matrix(vec![2.0, 0.0, 0.0, 4.0], 2, 0).unwrap();
        assert_relative_eq!(st.trace_inverse(), 0.75, epsilon = 1e-15);
    }

    #[test]
    fn add_to_identity() {
        let st = MomentState::from_matrix(vec![1.0, 0.0, 0.0, 1.0], 2, 0).unwrap();
        assert_eq!(st.log_det(), 0.0);
        let z = AugmentedRow::from_covariates(&[0.0]);
        let next = st.rank_one_update(&z, Direction::Add).unwrap();
        assert_eq!(next.q(), &[2.0, 0.0, 0.0, 1.0]);
        assert_relative_eq!(next.log_det(), 2f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn add_remove_round_trip() {
        let st = MomentState::from_matrix(vec![3.0, 1.0, 0.5, 1.0, 2.0, 0.2, 0.5, 0.2, 1.5], 3, 4)
            .unwrap();
        let mut work = st.clone();
        work.add(&[1.0, -0.7, 2.2]);
        work.remove(&[1.0, -0.7, 2.2]).unwrap();
        let frob: f64 = work
            .chol()
            .iter()
            .zip(st.chol())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(frob < 1e-10, "{frob}");
        assert_relative_eq!(work.log_det(), st.log_det(), epsilon = 1e-10);
        assert_eq!(work.count(), st.count());
    }

    #[test]
    fn removing_absent_row_fails_and_preserves_state() {
        let data = DataMatrix::from_rows(&[[1.0], [-1.0]]).unwrap();
        let mut st = build_moment(&data, &sel(&[0, 1], 2)).unwrap();
        let before = st.clone();
        assert_eq!(
            st.remove(&[1.0, 5.0]),
            Err(Error::DowndateNotPositiveDefinite)
        );
        assert_eq!(st, before);
    }

    #[test]
    fn identity_swap_is_exactly_zero() {
        let data = DataMatrix::from_rows(&[[1.0], [-1.0], [0.3]]).unwrap();
        let st = build_moment(&data, &sel(&[0, 1, 2], 3)).unwrap();
        assert_eq!(st.swap_delta_logdet(&[1.0, 0.3], &[1.0, 0.3]), 0.0);
    }

    #[test]
    fn swap_through_singular_intermediate() {
        // Removing (1, 1) from {-1, +1} leaves a rank-one matrix, yet the
        // swapped selection {-1, 2} is regular: det [[2,1],[1,5]] = 9.
        let data = DataMatrix::from_rows(&[[-1.0], [1.0]]).unwrap();
        let st = build_moment(&data, &sel(&[0, 1], 2)).unwrap();
        let delta = st.swap_delta_logdet(&[1.0, 1.0], &[1.0, 2.0]);
        assert_relative_eq!(delta, (9.0f64 / 4.0).ln(), epsilon = 1e-14);
    }

    #[test]
    fn swap_to_duplicate_is_inadmissible() {
        let data = DataMatrix::from_rows(&[[-1.0], [1.0]]).unwrap();
        let st = build_moment(&data, &sel(&[0, 1], 2)).unwrap();
        assert_eq!(
            st.swap_delta_logdet(&[1.0, 1.0], &[1.0, -1.0]),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn covariance_of_pair_and_factorial() {
        let data = DataMatrix::from_rows(&[[-1.0], [1.0]]).unwrap();
        let cs = covariance_summary(&data, &sel(&[0, 1], 2)).unwrap();
        assert_eq!(cs.means, vec![0.0]);
        assert_eq!(cs.cov, vec![1.0]);

        let cs = covariance_summary(&factorial_2(), &sel(&[0, 1, 2, 3], 4)).unwrap();
        assert_eq!(cs.means, vec![0.0, 0.0]);
        assert_eq!(cs.cov, vec![1.0, 0.0, 0.0, 1.0]);
        assert_eq!(cs.determinant(), 1.0);
    }

    #[test]
    fn covariance_needs_two_rows() {
        let data = DataMatrix::from_rows(&[[-1.0], [1.0]]).unwrap();
        assert!(covariance_summary(&data, &sel(&[0], 2)).is_err());
    }

    #[test]
    fn solve_recovers_rhs() {
        let st = MomentState::from_matrix(vec![4.0, 1.0, 1.0, 3.0], 2, 0).unwrap();
        let x = st.solve(&[1.0, 2.0]).unwrap();
        assert_relative_eq!(4.0 * x[0] + x[1], 1.0, epsilon = 1e-14);
        assert_relative_eq!(x[0] + 3.0 * x[1], 2.0, epsilon = 1e-14);
    }
}
