//! Least squares with robust covariance estimators and joint Wald tests,
//! plus the prediction-error regressions used to test forecast rationality.

mod battery;
mod covariance;
mod wald;

pub use battery::{
    efficiency_regression, individual_tests, joint_zero_test, rmse_against, test_battery_aggregate,
    test_battery_individual, AggregateCell, AggregateInputs, BatteryOptions, CovarianceChoice,
    ErrorRegression, IndividualDetail, IndividualInputs, IndividualReport, IndividualShare,
    NamedSeries,
};
pub use covariance::{
    cluster_covariance, hac_covariance, hc_covariance, newey_west_lag, CovarianceEstimate,
    CovarianceKind,
};
pub use wald::{exclusion_restrictions, wald_joint_test, JointTestResult};

use alloc::vec::Vec;

use crate::linalg::{least_squares, Matrix};
use crate::Result;

/// Coefficients, residuals and fit statistics of a least-squares regression.
#[derive(Debug, Clone)]
pub struct RegressionFit {
    pub coefficients: Vec<f64>,
    pub residuals: Vec<f64>,
    pub n_obs: usize,
    pub n_params: usize,
    pub rss: f64,
    pub r_squared: f64,
    /// `(X'X)^{-1}`, the bread of every sandwich estimator.
    pub xtx_inverse: Matrix,
}

impl RegressionFit {
    pub fn residual_df(&self) -> usize {
        self.n_obs - self.n_params
    }

    pub fn fitted(&self, y: &[f64]) -> Vec<f64> {
        y.iter().zip(&self.residuals).map(|(y, u)| y - u).collect()
    }
}

/// Ordinary least squares through a Householder QR of the design.
///
/// `r_squared` is centred on the mean of `y`; it is 0 when `y` is constant.
pub fn ols(x: &Matrix, y: &[f64]) -> Result<RegressionFit> {
    let ls = least_squares(x, y)?;
    let fitted = x.mul_vec(&ls.coefficients)?;
    let residuals: Vec<f64> = y.iter().zip(&fitted).map(|(y, f)| y - f).collect();
    let rss: f64 = residuals.iter().map(|u| u * u).sum();
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let tss: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    let r_squared = if tss > 0.0 { 1.0 - rss / tss } else { 0.0 };
    Ok(RegressionFit {
        coefficients: ls.coefficients,
        residuals,
        n_obs: x.rows(),
        n_params: x.cols(),
        rss,
        r_squared,
        xtx_inverse: ls.xtx_inverse,
    })
}
