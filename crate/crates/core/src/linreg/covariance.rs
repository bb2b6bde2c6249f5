//! Sandwich covariance estimators `c (X'X)^{-1} M (X'X)^{-1}`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use libm::{floor, pow};

use super::RegressionFit;
use crate::linalg::Matrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceKind {
    /// White's estimator with the `T / (T - K)` correction.
    Hc1,
    /// Newey-West with Bartlett weights and `lag` autocovariances.
    Hac { lag: usize },
    /// Cluster-robust with `clusters` groups.
    Clustered { clusters: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate {
    pub kind: CovarianceKind,
    pub matrix: Matrix,
}

impl CovarianceEstimate {
    pub fn std_error(&self, i: usize) -> f64 {
        libm::sqrt(self.matrix[(i, i)].max(0.0))
    }
}

/// Rule-of-thumb lag `floor(4 (T/100)^(2/9))`.
pub fn newey_west_lag(n_obs: usize) -> usize {
    floor(4.0 * pow(n_obs as f64 / 100.0, 2.0 / 9.0)) as usize
}

fn check_design(fit: &RegressionFit, x: &Matrix) -> Result<()> {
    if x.rows() != fit.n_obs || x.cols() != fit.n_params {
        return Err(Error::Dimension(alloc::format!(
            "design is {}x{}, fit has {} observations and {} parameters",
            x.rows(),
            x.cols(),
            fit.n_obs,
            fit.n_params
        )));
    }
    Ok(())
}

fn finite_sample_factor(fit: &RegressionFit) -> f64 {
    fit.n_obs as f64 / (fit.n_obs - fit.n_params) as f64
}

/// Adds `w * (a b' + b a')` to `m`; with `a == b` pass `w / 2` for `w a a'`.
fn add_symmetric_outer(m: &mut Matrix, a: &[f64], b: &[f64], w: f64) {
    let k = a.len();
    for i in 0..k {
        for j in 0..k {
            m[(i, j)] += w * (a[i] * b[j] + b[i] * a[j]);
        }
    }
}

/// Heteroskedasticity-robust HC1 covariance.
pub fn hc_covariance(fit: &RegressionFit, x: &Matrix) -> Result<CovarianceEstimate> {
    check_design(fit, x)?;
    let k = fit.n_params;
    let mut meat = Matrix::zeros(k, k);
    for t in 0..fit.n_obs {
        let u = fit.residuals[t];
        let row = x.row(t);
        for i in 0..k {
            let a = row[i] * u * u;
            for j in 0..k {
                meat[(i, j)] += a * row[j];
            }
        }
    }
    let mut v = Matrix::sandwich(&fit.xtx_inverse, &meat)?;
    v.scale(finite_sample_factor(fit));
    Ok(CovarianceEstimate {
        kind: CovarianceKind::Hc1,
        matrix: v,
    })
}

/// Newey-West covariance with Bartlett weights `1 - l/(L+1)` and the same
/// `T / (T - K)` factor as [`hc_covariance`]. Observations are taken in row order.
pub fn hac_covariance(fit: &RegressionFit, x: &Matrix, lag: usize) -> Result<CovarianceEstimate> {
    check_design(fit, x)?;
    let n = fit.n_obs;
    if lag >= n {
        return Err(Error::LagTooLarge { lag, n });
    }
    let k = fit.n_params;
    let scores: Vec<Vec<f64>> = (0..n)
        .map(|t| x.row(t).iter().map(|v| v * fit.residuals[t]).collect())
        .collect();
    let mut meat = Matrix::zeros(k, k);
    for s in &scores {
        add_symmetric_outer(&mut meat, s, s, 0.5);
    }
    for l in 1..=lag {
        let w = 1.0 - l as f64 / (lag as f64 + 1.0);
        for t in l..n {
            add_symmetric_outer(&mut meat, &scores[t], &scores[t - l], w);
        }
    }
    let mut v = Matrix::sandwich(&fit.xtx_inverse, &meat)?;
    v.scale(finite_sample_factor(fit));
    Ok(CovarianceEstimate {
        kind: CovarianceKind::Hac { lag },
        matrix: v,
    })
}

/// Cluster-robust covariance with factor `G/(G-1) * (N-1)/(N-K)`.
///
/// `k_effective` is the parameter count used in the correction; it can exceed
/// the design's column count when fixed effects were absorbed beforehand.
pub fn cluster_covariance<C: Ord>(
    fit: &RegressionFit,
    x: &Matrix,
    clusters: &[C],
    k_effective: usize,
) -> Result<CovarianceEstimate> {
    check_design(fit, x)?;
    if clusters.len() != fit.n_obs {
        return Err(Error::Dimension(
            "one cluster id per observation required".into(),
        ));
    }
    let k = fit.n_params;
    let mut sums: BTreeMap<&C, Vec<f64>> = BTreeMap::new();
    for (t, c) in clusters.iter().enumerate() {
        let s = sums.entry(c).or_insert_with(|| vec![0.0; k]);
        let u = fit.residuals[t];
        for (acc, v) in s.iter_mut().zip(x.row(t)) {
            *acc += v * u;
        }
    }
    let g = sums.len();
    if g < 2 {
        return Err(Error::TooFewClusters(g));
    }
    let n = fit.n_obs;
    if n <= k_effective {
        return Err(Error::InsufficientObservations {
            required: k_effective + 1,
            available: n,
        });
    }
    let mut meat = Matrix::zeros(k, k);
    for s in sums.values() {
        add_symmetric_outer(&mut meat, s, s, 0.5);
    }
    let mut v = Matrix::sandwich(&fit.xtx_inverse, &meat)?;
    let gf = g as f64;
    v.scale(gf / (gf - 1.0) * (n as f64 - 1.0) / (n - k_effective) as f64);
    Ok(CovarianceEstimate {
        kind: CovarianceKind::Clustered { clusters: g },
        matrix: v,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linreg::ols;

    #[test]
    fn lag_rule() {
        assert_eq!(newey_west_lag(100), 4);
        assert_eq!(newey_west_lag(92), 3);
        assert_eq!(newey_west_lag(30), 3);
    }

    #[test]
    fn orthonormal_design_with_equal_residual_magnitudes() {
        // columns e1+e2 and e3+e4 scaled to unit length; residual +-u orthogonal to both
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let x = Matrix::from_rows(&[
            alloc::vec![h, 0.0],
            alloc::vec![h, 0.0],
            alloc::vec![0.0, h],
            alloc::vec![0.0, h],
        ])
        .unwrap();
        let u = 0.3;
        let y = [u, -u, u, -u];
        let fit = ols(&x, &y).unwrap();
        let v = hc_covariance(&fit, &x).unwrap();
        let expected = u * u * 4.0 / 2.0;
        assert!((v.matrix[(0, 0)] - expected).abs() < 1e-14);
        assert!((v.matrix[(1, 1)] - expected).abs() < 1e-14);
        assert!(v.matrix[(0, 1)].abs() < 1e-14);
    }

    #[test]
    fn zero_residuals_give_zero_covariance() {
        let x =
            Matrix::from_columns(&[alloc::vec![1.0; 4], alloc::vec![1.0, 2.0, 3.0, 4.0]]).unwrap();
        let fit = ols(&x, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!(hc_covariance(&fit, &x).unwrap().matrix.max_abs() < 1e-25);
        assert!(matches!(
            hac_covariance(&fit, &x, 4),
            Err(Error::LagTooLarge { lag: 4, n: 4 })
        ));
    }

    #[test]
    fn single_cluster_is_rejected() {
        let x =
            Matrix::from_columns(&[alloc::vec![1.0; 4], alloc::vec![1.0, 2.0, 3.0, 5.0]]).unwrap();
        let fit = ols(&x, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(
            cluster_covariance(&fit, &x, &[1, 1, 1, 1], 2).unwrap_err(),
            Error::TooFewClusters(1)
        );
    }
}
