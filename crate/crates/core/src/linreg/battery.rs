//! Prediction-error regressions `y - p = a + b p + W'g + e` and the
//! unbiasedness / efficiency test batteries built on them.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use libm::sqrt;

use super::{
    exclusion_restrictions, hac_covariance, hc_covariance, newey_west_lag, ols, wald_joint_test,
    CovarianceEstimate, JointTestResult, RegressionFit,
};
use crate::judgment::BaselineMethod;
use crate::linalg::Matrix;
use crate::panel::{qualifying_economists, ForecastPanel, ParticipationThreshold, QuarterlySeries};
use crate::quarter::{Quarter, QuarterRange, ReleaseKind};
use crate::{Error, Result};

/// Extra observations required beyond the parameter count.
pub const MIN_EXTRA_OBS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct NamedSeries {
    pub name: String,
    pub values: QuarterlySeries,
}

impl NamedSeries {
    pub fn new(name: &str, values: QuarterlySeries) -> Self {
        Self {
            name: String::from(name),
            values,
        }
    }
}

/// The fitted error regression together with the data it was fitted on.
#[derive(Debug, Clone)]
pub struct ErrorRegression {
    pub quarters: Vec<Quarter>,
    pub design: Matrix,
    pub response: Vec<f64>,
    pub fit: RegressionFit,
}

/// Regresses `actual - prediction` on an intercept, the prediction and the
/// `extra` series over the quarters where all of them are observed.
pub fn efficiency_regression(
    actual: &QuarterlySeries,
    prediction: &QuarterlySeries,
    extra: &[NamedSeries],
) -> Result<ErrorRegression> {
    let k = 2 + extra.len();
    let quarters: Vec<Quarter> = prediction
        .keys()
        .copied()
        .filter(|q| actual.contains_key(q) && extra.iter().all(|w| w.values.contains_key(q)))
        .collect();
    let required = k + MIN_EXTRA_OBS;
    if quarters.len() < required {
        return Err(Error::InsufficientObservations {
            required,
            available: quarters.len(),
        });
    }
    let mut design = Matrix::zeros(quarters.len(), k);
    let mut response = Vec::with_capacity(quarters.len());
    for (i, q) in quarters.iter().enumerate() {
        let p = prediction[q];
        response.push(actual[q] - p);
        design[(i, 0)] = 1.0;
        design[(i, 1)] = p;
        for (j, w) in extra.iter().enumerate() {
            design[(i, 2 + j)] = w.values[q];
        }
    }
    let fit = ols(&design, &response)?;
    Ok(ErrorRegression {
        quarters,
        design,
        response,
        fit,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceChoice {
    Hc1,
    /// Newey-West with the rule-of-thumb lag for the sample size.
    HacAuto,
    Hac(usize),
}

impl CovarianceChoice {
    pub fn estimate(self, reg: &ErrorRegression) -> Result<CovarianceEstimate> {
        match self {
            CovarianceChoice::Hc1 => hc_covariance(&reg.fit, &reg.design),
            CovarianceChoice::HacAuto => {
                hac_covariance(&reg.fit, &reg.design, newey_west_lag(reg.fit.n_obs))
            }
            CovarianceChoice::Hac(lag) => hac_covariance(&reg.fit, &reg.design, lag),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryOptions {
    pub covariance: CovarianceChoice,
    /// Significance level for counting non-rejections.
    pub alpha: f64,
}

impl BatteryOptions {
    pub fn aggregate_default() -> Self {
        Self {
            covariance: CovarianceChoice::HacAuto,
            alpha: 0.05,
        }
    }

    pub fn individual_default() -> Self {
        Self {
            covariance: CovarianceChoice::Hc1,
            alpha: 0.05,
        }
    }
}

/// Joint test that the first `n` coefficients are zero.
pub fn joint_zero_test(
    reg: &ErrorRegression,
    n: usize,
    cov: CovarianceChoice,
) -> Result<JointTestResult> {
    let v = cov.estimate(reg)?;
    let which: Vec<usize> = (0..n).collect();
    let (r, target) = exclusion_restrictions(reg.fit.n_params, &which);
    match wald_joint_test(&reg.fit, &v, &r, &target) {
        // A noiseless fit with a violated restriction: the statistic is unbounded.
        Err(Error::SingularCovariance) if noiseless(reg) => Ok(JointTestResult {
            statistic: f64::INFINITY,
            df_numerator: n,
            df_denominator: reg.fit.residual_df(),
            p_value: 0.0,
        }),
        other => other,
    }
}

fn noiseless(reg: &ErrorRegression) -> bool {
    let scale: f64 = reg.response.iter().map(|v| v * v).sum::<f64>() + 1.0;
    reg.fit.rss <= 1e-24 * scale
}

/// One release x baseline-method cell of the aggregate battery.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateCell {
    pub release: ReleaseKind,
    pub method: BaselineMethod,
    /// Null `a = b = 0` without extra regressors.
    pub unbiasedness: core::result::Result<JointTestResult, Error>,
    /// Null `a = b = 0, g = 0` with the SPF nowcast and AR forecast as `W`.
    pub efficiency: core::result::Result<JointTestResult, Error>,
    /// RMSE of the baseline over the quarters it shares with the release.
    pub rmse: Option<f64>,
    pub n_obs: usize,
}

/// Series consumed by the aggregate battery.
#[derive(Debug, Clone, Default)]
pub struct AggregateInputs {
    pub actuals: BTreeMap<ReleaseKind, QuarterlySeries>,
    pub baselines: BTreeMap<(ReleaseKind, BaselineMethod), QuarterlySeries>,
    /// SPF nowcast matched to each baseline method.
    pub spf: BTreeMap<BaselineMethod, QuarterlySeries>,
    pub ar_forecasts: BTreeMap<ReleaseKind, QuarterlySeries>,
}

pub fn rmse_against(
    prediction: &QuarterlySeries,
    actual: &QuarterlySeries,
) -> Option<(f64, usize)> {
    let errs: Vec<f64> = prediction
        .iter()
        .filter_map(|(q, p)| actual.get(q).map(|y| p - y))
        .collect();
    if errs.is_empty() {
        return None;
    }
    let n = errs.len();
    Some((sqrt(errs.iter().map(|e| e * e).sum::<f64>() / n as f64), n))
}

/// Unbiasedness and efficiency tests of the baselines, one cell per
/// release and method. Failures stay inside their cell.
pub fn test_battery_aggregate(
    inputs: &AggregateInputs,
    options: BatteryOptions,
) -> Vec<AggregateCell> {
    let empty = QuarterlySeries::new();
    let mut cells = Vec::new();
    for release in ReleaseKind::ALL {
        for method in [BaselineMethod::Median, BaselineMethod::Mean] {
            let Some(base) = inputs.baselines.get(&(release, method)) else {
                continue;
            };
            let actual = inputs.actuals.get(&release).unwrap_or(&empty);
            let (rmse, n_obs) = match rmse_against(base, actual) {
                Some((r, n)) => (Some(r), n),
                None => (None, 0),
            };
            let unbiasedness = efficiency_regression(actual, base, &[])
                .and_then(|reg| joint_zero_test(&reg, 2, options.covariance));
            let w = [
                NamedSeries::new("spf", inputs.spf.get(&method).cloned().unwrap_or_default()),
                NamedSeries::new(
                    "ar",
                    inputs
                        .ar_forecasts
                        .get(&release)
                        .cloned()
                        .unwrap_or_default(),
                ),
            ];
            let efficiency = efficiency_regression(actual, base, &w)
                .and_then(|reg| joint_zero_test(&reg, 4, options.covariance));
            cells.push(AggregateCell {
                release,
                method,
                unbiasedness,
                efficiency,
                rmse,
                n_obs,
            });
        }
    }
    cells
}

/// Inputs of the per-forecaster battery.
#[derive(Debug, Clone, Copy)]
pub struct IndividualInputs<'a> {
    pub panel: &'a ForecastPanel,
    pub actuals: &'a BTreeMap<ReleaseKind, QuarterlySeries>,
    pub spf: &'a QuarterlySeries,
    pub ar_forecasts: &'a BTreeMap<ReleaseKind, QuarterlySeries>,
    pub sample: QuarterRange,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndividualDetail {
    pub economist: String,
    pub release: ReleaseKind,
    /// Observations in the unbiasedness regression.
    pub n_obs: usize,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub p_unbiased: Option<f64>,
    pub p_efficient: Option<f64>,
    /// Why a test could not be run.
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndividualShare {
    pub threshold: ParticipationThreshold,
    pub release: ReleaseKind,
    pub qualifying: usize,
    pub tested_unbiased: usize,
    pub share_unbiased: Option<f64>,
    pub tested_efficient: usize,
    pub share_efficient: Option<f64>,
    /// Qualifying forecasters with too few observations for the efficiency test.
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndividualReport {
    pub shares: Vec<IndividualShare>,
    pub details: Vec<IndividualDetail>,
}

/// Runs both tests for one forecaster and release.
pub fn individual_tests(
    economist: &str,
    release: ReleaseKind,
    forecasts: &QuarterlySeries,
    inputs: &IndividualInputs<'_>,
    options: BatteryOptions,
) -> IndividualDetail {
    let empty = QuarterlySeries::new();
    let actual = inputs.actuals.get(&release).unwrap_or(&empty);
    let mut note = None;
    let (n_obs, alpha, beta, p_unbiased) = match efficiency_regression(actual, forecasts, &[]) {
        Ok(reg) => {
            let p = joint_zero_test(&reg, 2, options.covariance);
            let (a, b) = (reg.fit.coefficients[0], reg.fit.coefficients[1]);
            match p {
                Ok(t) => (reg.fit.n_obs, Some(a), Some(b), Some(t.p_value)),
                Err(e) => {
                    note = Some(alloc::format!("unbiasedness: {e}"));
                    (reg.fit.n_obs, Some(a), Some(b), None)
                }
            }
        }
        Err(e) => {
            let n = forecasts.keys().filter(|q| actual.contains_key(q)).count();
            note = Some(alloc::format!("unbiasedness: {e}"));
            (n, None, None, None)
        }
    };
    let w = [
        NamedSeries::new("spf", inputs.spf.clone()),
        NamedSeries::new(
            "ar",
            inputs
                .ar_forecasts
                .get(&release)
                .cloned()
                .unwrap_or_default(),
        ),
    ];
    let p_efficient = match efficiency_regression(actual, forecasts, &w)
        .and_then(|reg| joint_zero_test(&reg, 4, options.covariance))
    {
        Ok(t) => Some(t.p_value),
        Err(e) => {
            if note.is_none() {
                note = Some(alloc::format!("efficiency: {e}"));
            }
            None
        }
    };
    IndividualDetail {
        economist: String::from(economist),
        release,
        n_obs,
        alpha,
        beta,
        p_unbiased,
        p_efficient,
        note,
    }
}

/// Shares of forecasters whose unbiasedness and efficiency tests do not
/// reject at `options.alpha`, per participation threshold and release.
pub fn test_battery_individual(
    inputs: &IndividualInputs<'_>,
    thresholds: &[ParticipationThreshold],
    options: BatteryOptions,
) -> IndividualReport {
    let panel = inputs.panel.restrict(&inputs.sample);
    let mut details = Vec::new();
    let mut by_key: BTreeMap<(ReleaseKind, String), usize> = BTreeMap::new();
    for release in ReleaseKind::ALL {
        for economist in panel.economists() {
            let forecasts = panel.series_of(economist, release);
            if forecasts.is_empty() {
                continue;
            }
            by_key.insert((release, String::from(economist)), details.len());
            details.push(individual_tests(
                economist, release, &forecasts, inputs, options,
            ));
        }
    }

    let mut shares = Vec::new();
    for &threshold in thresholds {
        for release in ReleaseKind::ALL {
            let qualifying = qualifying_economists(&panel, release, &inputs.sample, threshold);
            let rows: Vec<&IndividualDetail> = qualifying
                .iter()
                .filter_map(|e| by_key.get(&(release, e.clone())).map(|&i| &details[i]))
                .collect();
            let count = |f: fn(&IndividualDetail) -> Option<f64>| {
                let tested: Vec<f64> = rows.iter().filter_map(|d| f(d)).collect();
                let kept = tested.iter().filter(|p| **p >= options.alpha).count();
                let share = (!tested.is_empty()).then(|| kept as f64 / tested.len() as f64);
                (tested.len(), share)
            };
            let (tested_unbiased, share_unbiased) = count(|d| d.p_unbiased);
            let (tested_efficient, share_efficient) = count(|d| d.p_efficient);
            shares.push(IndividualShare {
                threshold,
                release,
                qualifying: rows.len(),
                tested_unbiased,
                share_unbiased,
                tested_efficient,
                share_efficient,
                excluded: rows.len() - tested_efficient,
            });
        }
    }
    IndividualReport { shares, details }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(t: i64) -> Quarter {
        Quarter::from_ordinal(8000 + t)
    }

    fn series(f: impl Fn(i64) -> f64, n: i64) -> QuarterlySeries {
        (0..n).map(|t| (q(t), f(t))).collect()
    }

    fn wiggle(t: i64) -> f64 {
        // deterministic, non-collinear with an intercept
        2.0 + libm::sin(t as f64 * 1.3) + 0.3 * libm::cos(t as f64 * 0.7)
    }

    #[test]
    fn perfect_prediction() {
        let y = series(wiggle, 30);
        let reg = efficiency_regression(&y, &y, &[]).unwrap();
        assert!(reg.fit.coefficients.iter().all(|c| c.abs() < 1e-14));
        let t = joint_zero_test(&reg, 2, CovarianceChoice::HacAuto).unwrap();
        assert_eq!((t.statistic, t.p_value), (0.0, 1.0));
    }

    #[test]
    fn constant_bias_lands_in_intercept() {
        let y = series(wiggle, 30);
        let p = series(|t| wiggle(t) - 0.7, 30);
        let reg = efficiency_regression(&y, &p, &[]).unwrap();
        assert!((reg.fit.coefficients[0] - 0.7).abs() < 1e-12);
        assert!(reg.fit.coefficients[1].abs() < 1e-12);
    }

    #[test]
    fn collinear_extra_regressor() {
        let y = series(wiggle, 30);
        let p = series(|t| wiggle(t) + 0.1 * libm::sin(t as f64), 30);
        let err =
            efficiency_regression(&y, &p, &[NamedSeries::new("copy", p.clone())]).unwrap_err();
        assert_eq!(err, Error::RankDeficient { column: 2 });
    }

    #[test]
    fn insufficient_overlap() {
        let y = series(wiggle, 9);
        assert_eq!(
            efficiency_regression(&y, &y, &[]).unwrap_err(),
            Error::InsufficientObservations {
                required: 10,
                available: 9
            }
        );
    }

    #[test]
    fn noiseless_bias_is_rejected() {
        let y = series(wiggle, 40);
        let p = series(|t| wiggle(t) + 1.0, 40);
        let reg = efficiency_regression(&y, &p, &[]).unwrap();
        let t = joint_zero_test(&reg, 2, CovarianceChoice::Hc1).unwrap();
        assert!(t.p_value < 1e-6);
    }
}
