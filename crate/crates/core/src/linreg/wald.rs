use alloc::vec::Vec;

use super::{CovarianceEstimate, RegressionFit};
use crate::linalg::Matrix;
use crate::special::f_survival;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointTestResult {
    /// `W / q`, compared against `F(q, T - K)`.
    pub statistic: f64,
    pub df_numerator: usize,
    pub df_denominator: usize,
    pub p_value: f64,
}

/// Tests `R b = r` with the quadratic form `(Rb - r)' [R V R']^{-1} (Rb - r) / q`.
///
/// An exactly satisfied restriction returns a zero statistic even when `V`
/// is degenerate.
pub fn wald_joint_test(
    fit: &RegressionFit,
    cov: &CovarianceEstimate,
    restrictions: &Matrix,
    target: &[f64],
) -> Result<JointTestResult> {
    let q = restrictions.rows();
    if q == 0 || restrictions.cols() != fit.n_params || target.len() != q {
        return Err(Error::Dimension(alloc::format!(
            "restriction matrix {}x{} and target of length {} for {} parameters",
            q,
            restrictions.cols(),
            target.len(),
            fit.n_params
        )));
    }
    let df_denominator = fit.residual_df();
    let discrepancy: Vec<f64> = restrictions
        .mul_vec(&fit.coefficients)?
        .iter()
        .zip(target)
        .map(|(a, b)| a - b)
        .collect();
    if discrepancy.iter().all(|d| *d == 0.0) {
        return Ok(JointTestResult {
            statistic: 0.0,
            df_numerator: q,
            df_denominator,
            p_value: 1.0,
        });
    }
    let mut middle = restrictions
        .mul(&cov.matrix)?
        .mul(&restrictions.transpose())?;
    middle.symmetrize();
    let inv = middle.inverse()?;
    let w: f64 = inv
        .mul_vec(&discrepancy)?
        .iter()
        .zip(&discrepancy)
        .map(|(a, b)| a * b)
        .sum();
    let statistic = (w / q as f64).max(0.0);
    Ok(JointTestResult {
        statistic,
        df_numerator: q,
        df_denominator,
        p_value: f_survival(statistic, q as f64, df_denominator as f64),
    })
}

/// `R` selecting the listed coefficients, for the null that all are zero.
pub fn exclusion_restrictions(n_params: usize, which: &[usize]) -> (Matrix, Vec<f64>) {
    let mut r = Matrix::zeros(which.len(), n_params);
    for (row, &col) in which.iter().enumerate() {
        r[(row, col)] = 1.0;
    }
    (r, alloc::vec![0.0; which.len()])
}
