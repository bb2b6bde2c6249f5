//! Recursive autoregressive forecasts of a release series, used as a
//! competing projection in the efficiency tests.
//!
//! Each target quarter is forecast one step ahead from an AR(p) with
//! intercept, fitted by conditional least squares on the same release's
//! observations from the estimation start through the previous quarter.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use libm::log;

use crate::linalg::Matrix;
use crate::linreg::ols;
use crate::panel::{ActualSeries, QuarterlySeries};
use crate::quarter::{Quarter, QuarterRange};
use crate::{Error, Result};

pub const DEFAULT_GAP_LIMIT: usize = 3;
pub const DEFAULT_MAX_LAG: usize = 8;
/// Observations required beyond the lag order before a forecast is made.
pub const MIN_HISTORY_MARGIN: usize = 10;

/// Fills missing quarters over the series' span, extended to `target` when
/// given. Interior gaps are interpolated linearly between the neighbouring
/// observations; quarters before the first or after the last observation
/// take the nearest observed value. Any run of missing quarters longer
/// than `gap_limit` is an error.
pub fn fill_missing(
    series: &ActualSeries,
    target: Option<&QuarterRange>,
    gap_limit: usize,
) -> Result<ActualSeries> {
    let span = series.span().ok_or(Error::Empty("actual series"))?;
    let (first, last) = match target {
        Some(r) => (span.first.min(r.first), span.last.max(r.last)),
        None => (span.first, span.last),
    };
    let mut out = series.clone();
    let mut missing: Vec<Quarter> = Vec::new();
    let mut previous: Option<(Quarter, f64)> = None;
    let mut flush = |missing: &mut Vec<Quarter>,
                     left: Option<(Quarter, f64)>,
                     right: Option<(Quarter, f64)>|
     -> Result<()> {
        if missing.is_empty() {
            return Ok(());
        }
        if missing.len() > gap_limit {
            return Err(Error::GapTooLong {
                start: missing[0],
                len: missing.len(),
                limit: gap_limit,
            });
        }
        for &q in missing.iter() {
            let v = match (left, right) {
                (Some((ql, vl)), Some((qr, vr))) => {
                    let w = q.distance_from(ql) as f64 / qr.distance_from(ql) as f64;
                    vl + w * (vr - vl)
                }
                (Some((_, v)), None) | (None, Some((_, v))) => v,
                (None, None) => unreachable!("the span has at least one observation"),
            };
            out.values.insert(q, v);
            out.filled.insert(q);
        }
        missing.clear();
        Ok(())
    };
    for q in (QuarterRange { first, last }).iter() {
        match series.get(q) {
            Some(v) => {
                flush(&mut missing, previous, Some((q, v)))?;
                previous = Some((q, v));
            }
            None => missing.push(q),
        }
    }
    flush(&mut missing, previous, None)?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum InfoCriterion {
    Aic,
    #[default]
    Sic,
    Hq,
}

impl InfoCriterion {
    pub fn as_str(self) -> &'static str {
        match self {
            InfoCriterion::Aic => "AIC",
            InfoCriterion::Sic => "SIC",
            InfoCriterion::Hq => "HQ",
        }
    }

    fn penalty(self, params: usize, n: usize) -> f64 {
        let (m, t) = (params as f64, n as f64);
        match self {
            InfoCriterion::Aic => 2.0 * m / t,
            InfoCriterion::Sic => m * log(t) / t,
            InfoCriterion::Hq => 2.0 * m * log(log(t)) / t,
        }
    }
}

/// Regresses `y[t]` on an intercept and `y[t-1..=t-p]` for `t` in `from..len`.
fn fit_ar(y: &[f64], p: usize, from: usize) -> Result<(Vec<f64>, f64)> {
    let rows = y.len() - from;
    let mut data = Vec::with_capacity(rows * (p + 1));
    for t in from..y.len() {
        data.push(1.0);
        data.extend((1..=p).map(|j| y[t - j]));
    }
    let x = Matrix::from_row_slice(rows, p + 1, &data)?;
    let fit = ols(&x, &y[from..])?;
    Ok((fit.coefficients, fit.rss))
}

/// Lag order in `0..=max_lag` minimising the criterion on the common sample
/// that holds out the first `max_lag` observations. Ties go to the smaller
/// order; an order whose design is singular is never chosen.
pub fn select_lag(y: &[f64], max_lag: usize, criterion: InfoCriterion) -> Result<usize> {
    if y.len() <= max_lag + 2 {
        return Err(Error::InsufficientObservations {
            required: max_lag + 3,
            available: y.len(),
        });
    }
    let n_eff = y.len() - max_lag;
    let scale: f64 = y[max_lag..].iter().map(|v| v * v).sum::<f64>().max(1.0);
    let mut best = (f64::INFINITY, 0usize);
    for p in 0..=max_lag {
        let score = match fit_ar(y, p, max_lag) {
            // an exact fit beats every noisy one; among exact fits the smallest order wins
            Ok((_, rss)) if rss <= 1e-24 * scale => f64::NEG_INFINITY,
            Ok((_, rss)) => log(rss / n_eff as f64) + criterion.penalty(p + 1, n_eff),
            Err(Error::RankDeficient { .. }) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        if score < best.0 {
            best = (score, p);
        }
    }
    Ok(best.1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArLag {
    Fixed(usize),
    /// Chosen by information criterion.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ArSpec {
    pub lag: ArLag,
    pub max_lag: usize,
    /// First quarter of every estimation window.
    pub start: Quarter,
    pub criterion: InfoCriterion,
    /// With `ArLag::Auto`, choose the order again for every target instead
    /// of once from the history before the earliest target.
    pub reselect_per_quarter: bool,
}

impl Default for ArSpec {
    fn default() -> Self {
        Self {
            lag: ArLag::Fixed(1),
            max_lag: DEFAULT_MAX_LAG,
            start: Quarter::new(1965, 3).expect("valid quarter"),
            criterion: InfoCriterion::Sic,
            reselect_per_quarter: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArForecast {
    pub value: f64,
    /// Order actually estimated; lower than requested when the design was singular.
    pub lag_used: usize,
}

/// The uninterrupted run of observations from `start` (or later) up to `target - 1`.
fn history(series: &QuarterlySeries, target: Quarter, start: Quarter) -> Vec<f64> {
    let mut out: Vec<f64> = series
        .range(start..target)
        .rev()
        .scan(target, |expected, (q, v)| {
            *expected = expected.pred();
            (*q == *expected).then_some(*v)
        })
        .collect();
    out.reverse();
    out
}

fn forecast_from(h: &[f64], lag: usize) -> Result<ArForecast> {
    let mut p = lag;
    loop {
        match fit_ar(h, p, p) {
            Ok((coef, _)) => {
                let n = h.len();
                let value = coef[0] + (1..=p).map(|j| coef[j] * h[n - j]).sum::<f64>();
                return Ok(ArForecast { value, lag_used: p });
            }
            Err(Error::RankDeficient { .. }) if p > 0 => p -= 1,
            Err(e) => return Err(e),
        }
    }
}

/// One-step forecasts for each target from an expanding estimation window.
pub fn recursive_ar_forecast(
    series: &QuarterlySeries,
    targets: &[Quarter],
    spec: &ArSpec,
) -> Result<BTreeMap<Quarter, ArForecast>> {
    let targets: BTreeSet<Quarter> = targets.iter().copied().collect();
    let Some(&earliest) = targets.first() else {
        return Ok(BTreeMap::new());
    };
    let fixed_lag = match spec.lag {
        ArLag::Fixed(p) => Some(p),
        ArLag::Auto if spec.reselect_per_quarter => None,
        ArLag::Auto => {
            let h = history(series, earliest, spec.start);
            Some(select_lag(&h, spec.max_lag, spec.criterion).map_err(|_| {
                Error::InsufficientHistory {
                    target: earliest,
                    required: spec.max_lag + 3,
                    available: h.len(),
                }
            })?)
        }
    };
    let mut out = BTreeMap::new();
    for target in targets {
        let h = history(series, target, spec.start);
        let lag = match fixed_lag {
            Some(p) => p,
            None => select_lag(&h, spec.max_lag, spec.criterion).map_err(|_| {
                Error::InsufficientHistory {
                    target,
                    required: spec.max_lag + 3,
                    available: h.len(),
                }
            })?,
        };
        let required = lag + MIN_HISTORY_MARGIN;
        if h.len() < required {
            return Err(Error::InsufficientHistory {
                target,
                required,
                available: h.len(),
            });
        }
        out.insert(target, forecast_from(&h, lag)?);
    }
    Ok(out)
}

/// Convenience wrapper returning only the forecast values.
pub fn ar_forecast_values(
    series: &QuarterlySeries,
    targets: &[Quarter],
    spec: &ArSpec,
) -> Result<QuarterlySeries> {
    Ok(recursive_ar_forecast(series, targets, spec)?
        .into_iter()
        .map(|(q, f)| (q, f.value))
        .collect())
}

/// Simulated AR(1) path used by tests and the synthetic generator.
pub fn ar1_path(intercept: f64, coefficient: f64, initial: f64, shocks: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; shocks.len()];
    let mut prev = initial;
    for (o, e) in out.iter_mut().zip(shocks) {
        prev = intercept + coefficient * prev + e;
        *o = prev;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quarter::ReleaseKind;
    use proptest::prelude::*;

    fn q(t: i64) -> Quarter {
        Quarter::from_ordinal(7800 + t)
    }

    fn series(values: &[(i64, f64)]) -> ActualSeries {
        ActualSeries::new(
            ReleaseKind::First,
            values.iter().map(|&(t, v)| (q(t), v)).collect(),
        )
    }

    fn spec_at(start: i64, lag: ArLag) -> ArSpec {
        ArSpec {
            lag,
            start: q(start),
            ..ArSpec::default()
        }
    }

    #[test]
    fn interior_and_edge_fill() {
        let s = fill_missing(&series(&[(0, 1.0), (2, 3.0)]), None, 3).unwrap();
        assert_eq!(s.get(q(1)), Some(2.0));
        assert!(s.filled.contains(&q(1)) && s.filled.len() == 1);

        let target = QuarterRange::new(q(-1), q(2)).unwrap();
        let s = fill_missing(&series(&[(0, 5.0), (1, 6.0)]), Some(&target), 3).unwrap();
        assert_eq!(s.get(q(-1)), Some(5.0));
        assert_eq!(s.get(q(2)), Some(6.0));

        let err = fill_missing(&series(&[(0, 1.0), (5, 2.0)]), None, 3).unwrap_err();
        assert_eq!(
            err,
            Error::GapTooLong {
                start: q(1),
                len: 4,
                limit: 3
            }
        );
    }

    #[test]
    fn constant_series_forecasts_the_constant() {
        let s: QuarterlySeries = (0..40).map(|t| (q(t), 2.5)).collect();
        let f = recursive_ar_forecast(&s, &[q(30), q(40)], &spec_at(0, ArLag::Fixed(1))).unwrap();
        for v in f.values() {
            assert!((v.value - 2.5).abs() < 1e-12);
            assert_eq!(v.lag_used, 0);
        }
    }

    #[test]
    fn noiseless_ar1_is_recovered() {
        let path = ar1_path(2.0, 0.5, 10.0, &[0.0; 40]);
        let s: QuarterlySeries = path
            .iter()
            .enumerate()
            .map(|(t, v)| (q(t as i64), *v))
            .collect();
        let f = recursive_ar_forecast(&s, &[q(25), q(39)], &spec_at(0, ArLag::Fixed(1))).unwrap();
        for (target, fc) in &f {
            let prev = s[&target.pred()];
            assert!((fc.value - (2.0 + 0.5 * prev)).abs() < 1e-9);
        }
    }

    #[test]
    fn short_history_names_the_target() {
        let s: QuarterlySeries = (0..8).map(|t| (q(t), t as f64)).collect();
        let err = recursive_ar_forecast(&s, &[q(8)], &spec_at(0, ArLag::Fixed(1))).unwrap_err();
        assert_eq!(
            err,
            Error::InsufficientHistory {
                target: q(8),
                required: 11,
                available: 8
            }
        );
    }

    #[test]
    fn exact_ar1_selects_one_lag() {
        let path = ar1_path(0.3, 0.9, 5.0, &[0.0; 60]);
        // the path must not have converged to its fixed point
        assert!((path[59] - path[58]).abs() > 1e-6);
        for c in [InfoCriterion::Aic, InfoCriterion::Sic, InfoCriterion::Hq] {
            assert_eq!(select_lag(&path, 4, c).unwrap(), 1);
        }
    }

    #[test]
    fn history_stops_at_a_gap() {
        let s: QuarterlySeries = [(0, 1.0), (2, 2.0), (3, 3.0)]
            .iter()
            .map(|&(t, v)| (q(t), v))
            .collect();
        assert_eq!(history(&s, q(4), q(0)), vec![2.0, 3.0]);
        assert_eq!(history(&s, q(4), q(3)), vec![3.0]);
    }

    proptest! {
        #[test]
        fn fill_is_idempotent(vals in prop::collection::vec(prop::option::weighted(0.7, -5.0f64..5.0), 2..30)) {
            let present: Vec<(i64, f64)> = vals.iter().enumerate().filter_map(|(t, v)| v.map(|v| (t as i64, v))).collect();
            prop_assume!(!present.is_empty());
            if let Ok(once) = fill_missing(&series(&present), None, 3) {
                let twice = fill_missing(&once, None, 3).unwrap();
                prop_assert_eq!(once, twice);
            }
        }

        #[test]
        fn affine_equivariance(shocks in prop::collection::vec(-1.0f64..1.0, 30..50), a in 0.5f64..3.0, b in -5.0f64..5.0) {
            let path = ar1_path(0.5, 0.4, 0.0, &shocks);
            let s: QuarterlySeries = path.iter().enumerate().map(|(t, v)| (q(t as i64), *v)).collect();
            let t: QuarterlySeries = s.iter().map(|(k, v)| (*k, a * v + b)).collect();
            let target = [q(path.len() as i64)];
            let spec = spec_at(0, ArLag::Fixed(2));
            let f = recursive_ar_forecast(&s, &target, &spec).unwrap()[&target[0]].value;
            let g = recursive_ar_forecast(&t, &target, &spec).unwrap()[&target[0]].value;
            prop_assert!((a * f + b - g).abs() < 1e-8 * (1.0 + g.abs()));
        }
    }
}
