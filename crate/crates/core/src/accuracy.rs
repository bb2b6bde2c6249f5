//! Accuracy of individual forecasters against the baseline: paired RMSE,
//! the Diebold-Mariano statistic and the Harvey-Leybourne-Newbold correction.

use alloc::string::String;
use alloc::vec::Vec;

use libm::{fabs, sqrt};

use crate::judgment::BaselineSeries;
use crate::panel::{qualifying_economists, ForecastPanel, ParticipationThreshold, QuarterlySeries};
use crate::quarter::{QuarterRange, ReleaseKind};
use crate::special::student_t_two_sided;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Loss {
    #[default]
    Squared,
    Absolute,
}

impl Loss {
    pub fn of(self, error: f64) -> f64 {
        match self {
            Loss::Squared => error * error,
            Loss::Absolute => fabs(error),
        }
    }
}

/// Errors of a forecaster and the baseline on their common quarters.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedErrors {
    pub own: Vec<f64>,
    pub baseline: Vec<f64>,
}

pub fn paired_errors(
    forecaster: &QuarterlySeries,
    baseline: &QuarterlySeries,
    actuals: &QuarterlySeries,
) -> PairedErrors {
    let mut out = PairedErrors {
        own: Vec::new(),
        baseline: Vec::new(),
    };
    for (q, f) in forecaster {
        if let (Some(b), Some(y)) = (baseline.get(q), actuals.get(q)) {
            out.own.push(f - y);
            out.baseline.push(b - y);
        }
    }
    out
}

fn rms(v: &[f64]) -> f64 {
    sqrt(v.iter().map(|e| e * e).sum::<f64>() / v.len() as f64)
}

/// `(rmse_self, rmse_baseline, n_common)` over the quarters all three series share.
pub fn paired_rmse(
    forecaster: &QuarterlySeries,
    baseline: &QuarterlySeries,
    actuals: &QuarterlySeries,
) -> Result<(f64, f64, usize)> {
    let e = paired_errors(forecaster, baseline, actuals);
    if e.own.is_empty() {
        return Err(Error::Empty(
            "forecaster, baseline and actuals share no quarter",
        ));
    }
    Ok((rms(&e.own), rms(&e.baseline), e.own.len()))
}

/// Diebold-Mariano statistic `mean(d) / sqrt(V / T)` with
/// `V = g0 + 2 sum_{l<h} g_l` built from population autocovariances of `d`.
pub fn dm_test(d: &[f64], horizon: usize) -> Result<f64> {
    let n = d.len();
    if n < 2 || horizon == 0 || horizon >= n {
        return Err(Error::InsufficientObservations {
            required: horizon.max(1) + 1,
            available: n,
        });
    }
    let nf = n as f64;
    let mean = d.iter().sum::<f64>() / nf;
    let autocov = |lag: usize| {
        (lag..n)
            .map(|t| (d[t] - mean) * (d[t - lag] - mean))
            .sum::<f64>()
            / nf
    };
    let mut v = autocov(0);
    for lag in 1..horizon {
        v += 2.0 * autocov(lag);
    }
    if !(v > 0.0) {
        return Err(Error::ZeroVariance("loss differential"));
    }
    Ok(mean / sqrt(v / nf))
}

/// Small-sample scaling `sqrt((T + 1 - 2h + h(h-1)/T) / T)`.
pub fn hln_factor(n: usize, horizon: usize) -> f64 {
    let (t, h) = (n as f64, horizon as f64);
    sqrt((t + 1.0 - 2.0 * h + h * (h - 1.0) / t) / t)
}

/// Corrected statistic and its two-sided p-value from Student-t with `T - 1` df.
pub fn hln_correction(dm: f64, n: usize, horizon: usize) -> (f64, f64) {
    let stat = dm * hln_factor(n, horizon);
    (stat, student_t_two_sided(stat, n as f64 - 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyComparison {
    pub economist_id: String,
    pub release: ReleaseKind,
    pub n_common: usize,
    pub rmse_self: f64,
    pub rmse_baseline: f64,
    /// Positive when the forecaster's loss exceeds the baseline's.
    pub dm_statistic: Option<f64>,
    pub hln_statistic: Option<f64>,
    pub p_value_hln: Option<f64>,
}

impl AccuracyComparison {
    pub fn beats_baseline(&self) -> bool {
        self.rmse_self < self.rmse_baseline
    }

    pub fn significantly_better(&self, alpha: f64) -> bool {
        self.beats_baseline() && self.p_value_hln.is_some_and(|p| p < alpha)
    }
}

/// Full comparison for one forecaster. The DM fields are empty when the loss
/// differential is degenerate.
pub fn compare_forecaster(
    economist: &str,
    release: ReleaseKind,
    forecaster: &QuarterlySeries,
    baseline: &QuarterlySeries,
    actuals: &QuarterlySeries,
    loss: Loss,
) -> Result<AccuracyComparison> {
    let (rmse_self, rmse_baseline, n_common) = paired_rmse(forecaster, baseline, actuals)?;
    let e = paired_errors(forecaster, baseline, actuals);
    let d: Vec<f64> = e
        .own
        .iter()
        .zip(&e.baseline)
        .map(|(a, b)| loss.of(*a) - loss.of(*b))
        .collect();
    let (dm_statistic, hln_statistic, p_value_hln) = match dm_test(&d, 1) {
        Ok(dm) => {
            let (s, p) = hln_correction(dm, n_common, 1);
            (Some(dm), Some(s), Some(p))
        }
        Err(_) => (None, None, None),
    };
    Ok(AccuracyComparison {
        economist_id: String::from(economist),
        release,
        n_common,
        rmse_self,
        rmse_baseline,
        dm_statistic,
        hln_statistic,
        p_value_hln,
    })
}

/// Comparisons for every forecaster of a release, in economist-id order.
pub fn compare_all(
    panel: &ForecastPanel,
    baseline: &BaselineSeries,
    actuals: &QuarterlySeries,
    sample: &QuarterRange,
    loss: Loss,
) -> Vec<AccuracyComparison> {
    let panel = panel.restrict(sample);
    panel
        .economists()
        .into_iter()
        .filter_map(|e| {
            let own = panel.series_of(e, baseline.release);
            compare_forecaster(e, baseline.release, &own, &baseline.values, actuals, loss).ok()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeatShare {
    pub threshold: ParticipationThreshold,
    pub release: ReleaseKind,
    pub forecasters: usize,
    /// Share with strictly lower RMSE than the baseline; ties do not count.
    pub share_better: Option<f64>,
    /// Share that is better and significant under the HLN test.
    pub share_significant: Option<f64>,
}

/// Per-threshold share of forecasters beating the baseline.
pub fn beat_baseline_share(
    comparisons: &[AccuracyComparison],
    panel: &ForecastPanel,
    release: ReleaseKind,
    sample: &QuarterRange,
    thresholds: &[ParticipationThreshold],
    alpha: f64,
) -> Vec<BeatShare> {
    thresholds
        .iter()
        .map(|&threshold| {
            let qualifying = qualifying_economists(panel, release, sample, threshold);
            let rows: Vec<&AccuracyComparison> = comparisons
                .iter()
                .filter(|c| {
                    c.release == release && qualifying.binary_search(&c.economist_id).is_ok()
                })
                .collect();
            let n = rows.len();
            let share = |count: usize| (n > 0).then(|| count as f64 / n as f64);
            BeatShare {
                threshold,
                release,
                forecasters: n,
                share_better: share(rows.iter().filter(|c| c.beats_baseline()).count()),
                share_significant: share(
                    rows.iter()
                        .filter(|c| c.significantly_better(alpha))
                        .count(),
                ),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quarter::Quarter;
    use alloc::vec;
    use proptest::prelude::*;

    fn series(v: &[f64]) -> QuarterlySeries {
        v.iter()
            .enumerate()
            .map(|(i, &x)| (Quarter::from_ordinal(8000 + i as i64), x))
            .collect()
    }

    #[test]
    fn paired_rmse_examples() {
        let y = series(&[1.0, 2.0]);
        assert_eq!(paired_rmse(&y, &y, &y).unwrap(), (0.0, 0.0, 2));
        let f = series(&[2.0, 1.0]);
        assert_eq!(paired_rmse(&f, &y, &y).unwrap(), (1.0, 0.0, 2));
        let long = series(&[1.0, 2.0, 50.0]);
        assert_eq!(paired_rmse(&f, &long, &long).unwrap(), (1.0, 0.0, 2));
        assert!(paired_rmse(&f, &QuarterlySeries::new(), &y).is_err());
    }

    #[test]
    fn dm_examples() {
        assert_eq!(dm_test(&[2.0, 0.0, 2.0, 0.0], 1).unwrap(), 2.0);
        assert_eq!(dm_test(&[1.0, -1.0, 1.0, -1.0], 1).unwrap(), 0.0);
        assert_eq!(
            dm_test(&[1.0; 4], 1),
            Err(Error::ZeroVariance("loss differential"))
        );
    }

    #[test]
    fn hln_examples() {
        assert!((hln_factor(4, 1) - sqrt(0.75)).abs() < 1e-15);
        assert!((hln_factor(1_000_000, 1) - 1.0).abs() < 1e-6);
        assert_eq!(hln_correction(0.0, 10, 1), (0.0, 1.0));
    }

    #[test]
    fn ties_do_not_beat_the_baseline() {
        let y = series(&[1.0, 2.0, 3.0]);
        let c = compare_forecaster("a", ReleaseKind::First, &y, &y, &y, Loss::Squared).unwrap();
        assert!(!c.beats_baseline());
        assert_eq!(c.dm_statistic, None);
    }

    proptest! {
        #[test]
        fn dm_is_antisymmetric(d in prop::collection::vec(-5.0f64..5.0, 8..40)) {
            let neg: Vec<f64> = d.iter().map(|v| -v).collect();
            match (dm_test(&d, 1), dm_test(&neg, 1)) {
                (Ok(a), Ok(b)) => prop_assert!((a + b).abs() < 1e-12 * (1.0 + a.abs())),
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false),
            }
        }

        #[test]
        fn hln_shrinks_and_fattens_tails(n in 2usize..500, stat in 0.0f64..5.0) {
            let f = hln_factor(n, 1);
            prop_assert!(f > 0.0 && f <= 1.0);
            let (_, p) = hln_correction(stat, n, 1);
            prop_assert!(p + 1e-12 >= crate::special::normal_two_sided(stat));
        }

        #[test]
        fn paired_rmse_ignores_order(v in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0), 1..20), seed in 0u64..1000) {
            // assign the same triples to shuffled quarters
            let n = v.len();
            let perm: Vec<usize> = {
                let mut p: Vec<usize> = (0..n).collect();
                let mut s = seed;
                for i in (1..n).rev() {
                    s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    p.swap(i, (s >> 33) as usize % (i + 1));
                }
                p
            };
            let build = |idx: &dyn Fn(usize) -> usize, pick: &dyn Fn(&(f64, f64, f64)) -> f64| -> QuarterlySeries {
                (0..n).map(|i| (Quarter::from_ordinal(8000 + idx(i) as i64), pick(&v[i]))).collect()
            };
            let id = |i: usize| i;
            let pm = |i: usize| perm[i];
            let a = paired_rmse(&build(&id, &|t| t.0), &build(&id, &|t| t.1), &build(&id, &|t| t.2)).unwrap();
            let b = paired_rmse(&build(&pm, &|t| t.0), &build(&pm, &|t| t.1), &build(&pm, &|t| t.2)).unwrap();
            prop_assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12 && a.2 == b.2);
        }
    }

    #[test]
    fn beat_share_counts() {
        let mk = |e: &str, own: f64, base: f64| AccuracyComparison {
            economist_id: e.into(),
            release: ReleaseKind::First,
            n_common: 10,
            rmse_self: own,
            rmse_baseline: base,
            dm_statistic: None,
            hln_statistic: None,
            p_value_hln: None,
        };
        let comps = vec![
            mk("a", 0.5, 1.0),
            mk("b", 1.0, 1.0),
            mk("c", 2.0, 1.0),
            mk("d", 1.5, 1.0),
        ];
        let q0 = Quarter::from_ordinal(8000);
        let recs = ["a", "b", "c", "d"]
            .iter()
            .map(|e| crate::panel::ForecastRecord {
                economist_id: (*e).into(),
                firm_id: String::new(),
                quarter: q0,
                release: ReleaseKind::First,
                value: 1.0,
                report_date: None,
            })
            .collect();
        let panel = ForecastPanel::new(recs).unwrap();
        let sample = QuarterRange::new(q0, q0).unwrap();
        let s = beat_baseline_share(
            &comps,
            &panel,
            ReleaseKind::First,
            &sample,
            &[ParticipationThreshold::at_least(0.1)],
            0.05,
        );
        assert_eq!(s[0].share_better, Some(0.25));
        assert_eq!(s[0].share_significant, Some(0.0));
    }
}
