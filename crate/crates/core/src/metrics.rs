use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::linalg::{build_moment, covariance_summary};
use crate::selection::Selection;

/// Design criteria of a selection. The efficiencies are bounded by one when
/// the covariates live in `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    pub gen_variance: f64,
    pub d_eff: f64,
    pub a_eff: f64,
    pub log_det_q: f64,
}

/// `D_eff = det(Q)^{1/(p+1)} / k` and `A_eff = (p+1) / (k tr(Q^{-1}))`.
pub fn efficiency(data: &DataMatrix, sel: &Selection) -> Result<EfficiencyReport> {
    let state = build_moment(data, sel)?;
    let dim = state.dim() as f64;
    let k = sel.len() as f64;
    let gen_variance = covariance_summary(data, sel)?.determinant();
    Ok(EfficiencyReport {
        gen_variance,
        d_eff: (state.log_det() / dim).exp() / k,
        a_eff: dim / (k * state.trace_inverse()),
        log_det_q: state.log_det(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MseReport {
    pub mse_intercept: f64,
    pub mse_slopes: f64,
}

/// Squared error of `(beta0, beta1)` split into intercept and slopes.
pub fn mse(beta_hat: &[f64], beta_true: &[f64]) -> Result<MseReport> {
    if beta_hat.len() != beta_true.len() {
        return Err(Error::DimensionMismatch {
            expected: beta_true.len(),
            found: beta_hat.len(),
        });
    }
    if beta_hat.is_empty() {
        return Err(Error::param("beta", "empty coefficient vector"));
    }
    let mse_slopes = beta_hat[1..]
        .iter()
        .zip(&beta_true[1..])
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    Ok(MseReport {
        mse_intercept: (beta_hat[0] - beta_true[0]).powi(2),
        mse_slopes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hull {
    /// Counterclockwise, starting from the lowest-leftmost point.
    pub vertices: Vec<(f64, f64)>,
    pub area: f64,
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Planar convex hull by Andrew's monotone chain; collinear points on an
/// edge are dropped. An empty input yields an empty hull.
pub fn hull_2d(points: &[(f64, f64)]) -> Hull {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    if pts.len() < 3 {
        return Hull {
            vertices: pts,
            area: 0.0,
        };
    }
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(2 * pts.len());
    for &pt in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], pt) <= 0.0 {
            hull.pop();
        }
        hull.push(pt);
    }
    let lower_len = hull.len() + 1;
    for &pt in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len
            && cross(hull[hull.len() - 2], hull[hull.len() - 1], pt) <= 0.0
        {
            hull.pop();
        }
        hull.push(pt);
    }
    hull.pop();
    let area = polygon_area(&hull);
    Hull {
        vertices: hull,
        area,
    }
}

/// Shoelace area; zero for fewer than three vertices.
pub fn polygon_area(vertices: &[(f64, f64)]) -> f64 {
    if vertices.len() < 3 {
        return 0.0;
    }
    let twice: f64 = vertices
        .iter()
        .zip(vertices.iter().cycle().skip(1))
        .map(|(a, b)| a.0 * b.1 - b.0 * a.1)
        .sum();
    twice.abs() / 2.0
}

/// Whether `pt` lies inside or on a counterclockwise convex polygon.
pub fn contains(hull: &[(f64, f64)], pt: (f64, f64), tol: f64) -> bool {
    match hull.len() {
        0 => false,
        1 => (hull[0].0 - pt.0).abs() <= tol && (hull[0].1 - pt.1).abs() <= tol,
        _ => hull
            .iter()
            .zip(hull.iter().cycle().skip(1))
            .all(|(&a, &b)| cross(a, b, pt) >= -tol),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selection::SelectionSource;

    fn all(n: usize) -> Selection {
        Selection::new((0..n).collect(), n, SelectionSource::Custom).unwrap()
    }

    #[test]
    fn factorial_is_fully_efficient() {
        let data =
            DataMatrix::from_rows(&[[-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0], [1.0, 1.0]]).unwrap();
        let e = efficiency(&data, &all(4)).unwrap();
        assert_eq!(e.d_eff, 1.0);
        assert_eq!(e.a_eff, 1.0);
        assert_eq!(e.gen_variance, 1.0);
    }

    #[test]
    fn symmetric_pair_is_fully_efficient() {
        let data = DataMatrix::from_rows(&[[-1.0], [1.0]]).unwrap();
        let e = efficiency(&data, &all(2)).unwrap();
        assert!((e.d_eff - 1.0).abs() < 1e-15);
        assert!((e.a_eff - 1.0).abs() < 1e-15);
    }

    #[test]
    fn repeated_point_is_singular() {
        let data = DataMatrix::from_rows(&[[1.0], [1.0]]).unwrap();
        assert_eq!(efficiency(&data, &all(2)), Err(Error::Singular));
    }

    #[test]
    fn mse_decomposition() {
        let beta = [1.0, 2.0, 3.0];
        assert_eq!(
            mse(&beta, &beta).unwrap(),
            MseReport {
                mse_intercept: 0.0,
                mse_slopes: 0.0
            }
        );
        assert_eq!(mse(&[1.0, 3.0, 3.0], &beta).unwrap().mse_slopes, 1.0);
        assert_eq!(mse(&[3.0, 2.0, 3.0], &beta).unwrap().mse_intercept, 4.0);
        assert!(mse(&[1.0, 2.0], &beta).is_err());
    }

    #[test]
    fn square_hull() {
        let pts = [
            (1.0, 1.0),
            (-1.0, 1.0),
            (0.0, 0.0),
            (1.0, -1.0),
            (-1.0, -1.0),
            (0.5, 0.2),
        ];
        let h = hull_2d(&pts);
        assert_eq!(h.area, 4.0);
        assert_eq!(
            h.vertices,
            vec![(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)]
        );
    }

    #[test]
    fn collinear_hull() {
        let h = hull_2d(&[(0.0, 0.0), (2.0, 2.0), (1.0, 1.0)]);
        assert_eq!(h.area, 0.0);
        assert_eq!(h.vertices, vec![(0.0, 0.0), (2.0, 2.0)]);
    }

    #[test]
    fn degenerate_hulls() {
        assert_eq!(hull_2d(&[(3.0, 4.0)]).vertices, vec![(3.0, 4.0)]);
        assert_eq!(hull_2d(&[(3.0, 4.0), (3.0, 4.0)]).vertices.len(), 1);
        assert!(hull_2d(&[]).vertices.is_empty());
    }
}
