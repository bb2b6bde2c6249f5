//! Cross-sectional moments of the backcasts and their errors, quarter by quarter.
//!
//! Kurtosis is always reported as excess kurtosis (zero for the normal).

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use libm::{pow, sqrt};

use crate::panel::{ActualSeries, ForecastPanel};
use crate::quarter::{Quarter, ReleaseKind};
use crate::{Error, Result};

/// How central moments are normalised.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum MomentConvention {
    /// Divide by `N`.
    #[default]
    Population,
    /// `N - 1` standard deviation and the adjusted Fisher-Pearson skewness
    /// and excess kurtosis.
    SampleAdjusted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuarterStats {
    pub quarter: Quarter,
    pub n: usize,
    pub rmse: f64,
    pub std_dev: f64,
    /// Absent when `n < 3` or the cross-section has no dispersion.
    pub skewness: Option<f64>,
    /// Absent when `n < 4` or the cross-section has no dispersion.
    pub excess_kurtosis: Option<f64>,
}

/// Per-quarter statistics together with the quarters skipped for lack of an actual.
#[derive(Debug, Clone, PartialEq)]
pub struct QuarterStatsReport {
    pub stats: Vec<QuarterStats>,
    pub missing_actual: Vec<Quarter>,
}

/// Moments and RMSE of a single cross-section of forecasts.
pub fn cross_section_stats(
    quarter: Quarter,
    forecasts: &[f64],
    actual: f64,
    convention: MomentConvention,
) -> Result<QuarterStats> {
    let n = forecasts.len();
    if n == 0 {
        return Err(Error::Empty("cross-section"));
    }
    let nf = n as f64;
    let mean = forecasts.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4, mut sse) = (0.0, 0.0, 0.0, 0.0);
    for &f in forecasts {
        let d = f - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
        let e = f - actual;
        sse += e * e;
    }
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    let rmse = sqrt(sse / nf);

    let dispersed = m2 > 0.0;
    let g1 = (dispersed && n >= 3).then(|| m3 / pow(m2, 1.5));
    let g2 = (dispersed && n >= 4).then(|| m4 / (m2 * m2) - 3.0);

    let (std_dev, skewness, excess_kurtosis) = match convention {
        MomentConvention::Population => (sqrt(m2), g1, g2),
        MomentConvention::SampleAdjusted => {
            let sd = if n > 1 {
                sqrt(m2 * nf / (nf - 1.0))
            } else {
                0.0
            };
            let skew = g1.map(|g| g * sqrt(nf * (nf - 1.0)) / (nf - 2.0));
            let kurt = g2.map(|g| ((nf + 1.0) * g + 6.0) * (nf - 1.0) / ((nf - 2.0) * (nf - 3.0)));
            (sd, skew, kurt)
        }
    };
    Ok(QuarterStats {
        quarter,
        n,
        rmse,
        std_dev,
        skewness,
        excess_kurtosis,
    })
}

/// Statistics for every quarter of `release` that has forecasts.
pub fn quarter_stats(
    panel: &ForecastPanel,
    actuals: &ActualSeries,
    release: ReleaseKind,
    convention: MomentConvention,
) -> QuarterStatsReport {
    let mut stats = Vec::new();
    let mut missing_actual = Vec::new();
    for (quarter, forecasts) in panel.cross_sections(release) {
        match actuals.get(quarter) {
            Some(actual) => stats.push(
                cross_section_stats(quarter, &forecasts, actual, convention)
                    .expect("cross-sections are non-empty"),
            ),
            None => missing_actual.push(quarter),
        }
    }
    QuarterStatsReport {
        stats,
        missing_actual,
    }
}

/// Average of the per-quarter RMSEs.
pub fn armse(stats: &[QuarterStats]) -> Result<f64> {
    if stats.is_empty() {
        return Err(Error::Empty("quarter statistics"));
    }
    Ok(stats.iter().map(|s| s.rmse).sum::<f64>() / stats.len() as f64)
}

/// Average, minimum and maximum of one column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    fn of(values: impl Iterator<Item = f64>) -> Option<Summary> {
        let mut count = 0usize;
        let (mut sum, mut min, mut max) = (0.0, f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            count += 1;
            sum += v;
            min = min.min(v);
            max = max.max(v);
        }
        (count > 0).then(|| Summary {
            mean: sum / count as f64,
            min,
            max,
        })
    }
}

/// Averages across quarters with extremes, one row per release.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptiveSummary {
    pub n: Option<Summary>,
    /// The mean of this summary is the ARMSE.
    pub rmse: Option<Summary>,
    pub std_dev: Option<Summary>,
    pub skewness: Option<Summary>,
    pub excess_kurtosis: Option<Summary>,
}

pub fn summarize(stats: &[QuarterStats]) -> DescriptiveSummary {
    DescriptiveSummary {
        n: Summary::of(stats.iter().map(|s| s.n as f64)),
        rmse: Summary::of(stats.iter().map(|s| s.rmse)),
        std_dev: Summary::of(stats.iter().map(|s| s.std_dev)),
        skewness: Summary::of(stats.iter().filter_map(|s| s.skewness)),
        excess_kurtosis: Summary::of(stats.iter().filter_map(|s| s.excess_kurtosis)),
    }
}

/// Per-quarter RMSE of the three releases on a common quarter axis.
#[derive(Debug, Clone, PartialEq)]
pub struct RmseSeries {
    pub quarters: Vec<Quarter>,
    /// Indexed by release; `None` marks a quarter missing for that release.
    pub values: [Vec<Option<f64>>; 3],
}

pub fn rmse_series(per_release: [&[QuarterStats]; 3]) -> RmseSeries {
    let quarters: Vec<Quarter> = per_release
        .iter()
        .flat_map(|s| s.iter().map(|q| q.quarter))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let values = per_release.map(|stats| {
        quarters
            .iter()
            .map(|q| {
                stats
                    .binary_search_by(|s| s.quarter.cmp(q))
                    .ok()
                    .map(|i| stats[i].rmse)
            })
            .collect()
    });
    RmseSeries { quarters, values }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q0() -> Quarter {
        Quarter::new(2000, 1).unwrap()
    }

    fn pop(f: &[f64], a: f64) -> QuarterStats {
        cross_section_stats(q0(), f, a, MomentConvention::Population).unwrap()
    }

    #[test]
    fn symmetric_cross_section() {
        let s = pop(&[1.0, 2.0, 3.0], 2.0);
        assert!((s.rmse - sqrt(2.0 / 3.0)).abs() < 1e-15);
        assert!((s.std_dev - sqrt(2.0 / 3.0)).abs() < 1e-15);
        assert_eq!(s.skewness, Some(0.0));
        assert_eq!(s.excess_kurtosis, None);
    }

    #[test]
    fn degenerate_cross_section() {
        let s = pop(&[2.0; 4], 2.0);
        assert_eq!(
            (s.rmse, s.std_dev, s.skewness, s.excess_kurtosis),
            (0.0, 0.0, None, None)
        );
    }

    #[test]
    fn skewed_cross_section() {
        // deviations from the mean 1: -1,-1,-1,3 -> m2 = 3, m3 = 6, m4 = 21
        // errors against the actual 1 are the same deviations: RMSE = sqrt(12/4)
        let s = pop(&[0.0, 0.0, 0.0, 4.0], 1.0);
        assert!((s.rmse - sqrt(3.0)).abs() < 1e-15);
        assert!((s.skewness.unwrap() - 2.0 / sqrt(3.0)).abs() < 1e-14);
        assert!((s.excess_kurtosis.unwrap() + 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn adjusted_moments() {
        let s = cross_section_stats(
            q0(),
            &[0.0, 0.0, 0.0, 4.0],
            1.0,
            MomentConvention::SampleAdjusted,
        )
        .unwrap();
        assert!((s.std_dev - 2.0).abs() < 1e-15);
        // G1 = g1 sqrt(12)/2 = 2
        assert!((s.skewness.unwrap() - 2.0).abs() < 1e-14);
        // G2 = ((5)(-2/3) + 6) * 3 / 2 = 4
        assert!((s.excess_kurtosis.unwrap() - 4.0).abs() < 1e-13);
    }

    fn with_rmse(r: f64, t: i64) -> QuarterStats {
        QuarterStats {
            quarter: Quarter::from_ordinal(8000 + t),
            n: 1,
            rmse: r,
            std_dev: 0.0,
            skewness: None,
            excess_kurtosis: None,
        }
    }

    #[test]
    fn armse_examples() {
        assert_eq!(armse(&[with_rmse(1.0, 0), with_rmse(3.0, 1)]).unwrap(), 2.0);
        assert_eq!(armse(&[with_rmse(0.5, 0)]).unwrap(), 0.5);
        let constant: Vec<_> = (0..91).map(|t| with_rmse(0.85, t)).collect();
        assert!((armse(&constant).unwrap() - 0.85).abs() < 1e-14);
        assert_eq!(armse(&[]), Err(Error::Empty("quarter statistics")));
    }

    #[test]
    fn rmse_series_marks_missing() {
        let a = [with_rmse(1.0, 0), with_rmse(2.0, 1)];
        let b = [with_rmse(1.5, 1)];
        let s = rmse_series([&a, &b, &a]);
        assert_eq!(s.quarters.len(), 2);
        assert_eq!(s.values[1], alloc::vec![None, Some(1.5)]);
        assert_eq!(s.values[0], s.values[2]);
    }
}
