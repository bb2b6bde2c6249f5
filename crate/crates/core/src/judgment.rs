//! Common baseline, per-forecaster judgments and their sign statistics.
//!
//! A judgment is the deviation of an individual forecast from the baseline,
//! `j = forecast - baseline`. It is *neutral* when forecast and baseline
//! coincide on the reporting grid (0.1 percentage points by default).

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use libm::{round, sqrt};

use crate::panel::{
    median_in_place, qualifying_economists, ActualSeries, ForecastPanel, ParticipationThreshold,
    QuarterlySeries,
};
use crate::quarter::{Quarter, QuarterRange, ReleaseKind};
use crate::{Error, Result};

pub const DEFAULT_GRID: f64 = 0.1;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BaselineMethod {
    #[default]
    Median,
    Mean,
}

impl BaselineMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            BaselineMethod::Median => "median",
            BaselineMethod::Mean => "mean",
        }
    }

    pub fn aggregate(self, values: &mut [f64]) -> f64 {
        match self {
            BaselineMethod::Median => median_in_place(values),
            BaselineMethod::Mean => values.iter().sum::<f64>() / values.len() as f64,
        }
    }
}

/// Index of `x` on a grid of width `grid`, rounding halves away from zero.
///
/// The quotient is first snapped to 1e-6 grid units so that representation
/// error (3.05 / 0.1 = 30.499999...) does not decide the rounding direction.
pub fn grid_index(x: f64, grid: f64) -> i64 {
    let scaled = round(x / grid * 1e6) / 1e6;
    round(scaled) as i64
}

/// Rounds `x` to the reporting grid.
pub fn round_to_grid(x: f64, grid: f64) -> f64 {
    if grid <= 0.0 {
        return x;
    }
    // dividing by the reciprocal keeps 0.1-multiples exact in decimal printing
    grid_index(x, grid) as f64 / (1.0 / grid)
}

pub fn equal_on_grid(a: f64, b: f64, grid: f64) -> bool {
    if grid <= 0.0 {
        return a == b;
    }
    grid_index(a, grid) == grid_index(b, grid)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineSeries {
    pub release: ReleaseKind,
    pub method: BaselineMethod,
    pub values: QuarterlySeries,
}

/// Cross-sectional median or mean of all forecasts in each quarter.
pub fn baseline(
    panel: &ForecastPanel,
    release: ReleaseKind,
    method: BaselineMethod,
) -> BaselineSeries {
    let values = panel
        .cross_sections(release)
        .into_iter()
        .map(|(q, mut v)| (q, method.aggregate(&mut v)))
        .collect();
    BaselineSeries {
        release,
        method,
        values,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Judgment {
    pub value: f64,
    pub neutral: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Negative,
    Positive,
    Neutral,
}

impl Judgment {
    pub fn sign(&self) -> Sign {
        if self.neutral {
            Sign::Neutral
        } else if self.value < 0.0 {
            Sign::Negative
        } else {
            Sign::Positive
        }
    }
}

/// Judgments keyed by `(economist, quarter, release)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct JudgmentPanel {
    pub grid: f64,
    pub entries: BTreeMap<(String, Quarter, ReleaseKind), Judgment>,
}

impl JudgmentPanel {
    pub fn get(&self, economist: &str, quarter: Quarter, release: ReleaseKind) -> Option<Judgment> {
        self.entries
            .get(&(String::from(economist), quarter, release))
            .copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(String, Quarter, ReleaseKind), &Judgment)> {
        self.entries.iter()
    }

    /// Merges another panel (typically another release) into this one.
    pub fn extend(&mut self, other: JudgmentPanel) {
        self.entries.extend(other.entries);
    }

    /// Each economist's judgments for one release in chronological order.
    pub fn by_economist(&self, release: ReleaseKind) -> BTreeMap<&str, Vec<(Quarter, Judgment)>> {
        let mut out: BTreeMap<&str, Vec<(Quarter, Judgment)>> = BTreeMap::new();
        for ((e, q, k), j) in &self.entries {
            if *k == release {
                out.entry(e.as_str()).or_default().push((*q, *j));
            }
        }
        out
    }
}

/// `j = forecast - baseline` for every forecast of the baseline's release.
pub fn extract_judgments(
    panel: &ForecastPanel,
    baseline: &BaselineSeries,
    grid: f64,
) -> Result<JudgmentPanel> {
    let mut entries = BTreeMap::new();
    for r in panel
        .records()
        .iter()
        .filter(|r| r.release == baseline.release)
    {
        let b = *baseline
            .values
            .get(&r.quarter)
            .ok_or(Error::MissingBaseline { quarter: r.quarter })?;
        entries.insert(
            (r.economist_id.clone(), r.quarter, r.release),
            Judgment {
                value: r.value - b,
                neutral: equal_on_grid(r.value, b, grid),
            },
        );
    }
    Ok(JudgmentPanel { grid, entries })
}

/// Judgments against a baseline that leaves out the forecaster's own forecast.
///
/// Quarters with a single forecast have no leave-one-out baseline and are skipped.
pub fn extract_judgments_leave_one_out(
    panel: &ForecastPanel,
    release: ReleaseKind,
    method: BaselineMethod,
    grid: f64,
) -> JudgmentPanel {
    let sections = panel.cross_sections(release);
    let mut entries = BTreeMap::new();
    let mut scratch = Vec::new();
    for r in panel.records().iter().filter(|r| r.release == release) {
        let section = &sections[&r.quarter];
        if section.len() < 2 {
            continue;
        }
        scratch.clear();
        scratch.extend_from_slice(section);
        let pos = scratch
            .iter()
            .position(|v| *v == r.value)
            .expect("record belongs to its cross-section");
        scratch.swap_remove(pos);
        let b = method.aggregate(&mut scratch);
        entries.insert(
            (r.economist_id.clone(), r.quarter, r.release),
            Judgment {
                value: r.value - b,
                neutral: equal_on_grid(r.value, b, grid),
            },
        );
    }
    JudgmentPanel { grid, entries }
}

/// Shares of negative, positive and neutral judgments.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SignTriple {
    pub negative: f64,
    pub positive: f64,
    pub neutral: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignShares {
    pub threshold: ParticipationThreshold,
    pub economists: usize,
    /// Cross-economist mean; `None` when no economist qualifies.
    pub mean: Option<SignTriple>,
    /// Cross-economist population standard deviation.
    pub std_dev: Option<SignTriple>,
}

fn economist_sign_shares(judgments: &[(Quarter, Judgment)]) -> Option<SignTriple> {
    if judgments.is_empty() {
        return None;
    }
    let n = judgments.len() as f64;
    let mut t = SignTriple::default();
    for (_, j) in judgments {
        match j.sign() {
            Sign::Negative => t.negative += 1.0,
            Sign::Positive => t.positive += 1.0,
            Sign::Neutral => t.neutral += 1.0,
        }
    }
    t.negative /= n;
    t.positive /= n;
    t.neutral /= n;
    Some(t)
}

fn qualifying_judgments<'a>(
    jp: &'a JudgmentPanel,
    panel: &ForecastPanel,
    release: ReleaseKind,
    sample: &QuarterRange,
    threshold: ParticipationThreshold,
) -> Vec<Vec<(Quarter, Judgment)>> {
    let by_economist = jp.by_economist(release);
    qualifying_economists(panel, release, sample, threshold)
        .iter()
        .filter_map(|e| by_economist.get(e.as_str()))
        .map(|js| {
            js.iter()
                .copied()
                .filter(|(q, _)| sample.contains(*q))
                .collect::<Vec<_>>()
        })
        .filter(|js| !js.is_empty())
        .collect()
}

/// Mean and dispersion across economists of their sign shares, per threshold.
pub fn sign_shares(
    jp: &JudgmentPanel,
    panel: &ForecastPanel,
    release: ReleaseKind,
    sample: &QuarterRange,
    thresholds: &[ParticipationThreshold],
) -> Vec<SignShares> {
    thresholds
        .iter()
        .map(|&threshold| {
            let shares: Vec<SignTriple> =
                qualifying_judgments(jp, panel, release, sample, threshold)
                    .iter()
                    .filter_map(|js| economist_sign_shares(js))
                    .collect();
            let n = shares.len() as f64;
            let (mean, std_dev) = if shares.is_empty() {
                (None, None)
            } else {
                let mean = SignTriple {
                    negative: shares.iter().map(|s| s.negative).sum::<f64>() / n,
                    positive: shares.iter().map(|s| s.positive).sum::<f64>() / n,
                    neutral: shares.iter().map(|s| s.neutral).sum::<f64>() / n,
                };
                let sd = |f: fn(&SignTriple) -> f64, m: f64| {
                    sqrt(shares.iter().map(|s| (f(s) - m) * (f(s) - m)).sum::<f64>() / n)
                };
                let std_dev = SignTriple {
                    negative: sd(|s| s.negative, mean.negative),
                    positive: sd(|s| s.positive, mean.positive),
                    neutral: sd(|s| s.neutral, mean.neutral),
                };
                (Some(mean), Some(std_dev))
            };
            SignShares {
                threshold,
                economists: shares.len(),
                mean,
                std_dev,
            }
        })
        .collect()
}

pub const HISTOGRAM_BINS: [&str; 5] = ["<=20", "20-40", "40-60", "60-80", ">80"];

/// Bin of a share in `[0, 1]`: `[0,.2]`, `(.2,.4]`, `(.4,.6]`, `(.6,.8]`, `(.8,1]`.
pub fn share_bin(share: f64) -> usize {
    const EDGES: [f64; 4] = [0.2, 0.4, 0.6, 0.8];
    EDGES
        .iter()
        .position(|&e| share <= e + 1e-12)
        .unwrap_or(EDGES.len())
}

#[derive(Debug, Clone, PartialEq)]
pub struct NegativeShareHistogram {
    pub threshold: ParticipationThreshold,
    pub counts: [usize; 5],
    /// Economists excluded because all their judgments were neutral.
    pub excluded_neutral_only: usize,
}

impl NegativeShareHistogram {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Distribution across economists of the negative share among non-neutral judgments.
pub fn negative_share_histogram(
    jp: &JudgmentPanel,
    panel: &ForecastPanel,
    release: ReleaseKind,
    sample: &QuarterRange,
    threshold: ParticipationThreshold,
) -> NegativeShareHistogram {
    let mut counts = [0usize; 5];
    let mut excluded = 0;
    for js in qualifying_judgments(jp, panel, release, sample, threshold) {
        let (neg, non_neutral) =
            js.iter()
                .fold((0usize, 0usize), |(n, t), (_, j)| match j.sign() {
                    Sign::Negative => (n + 1, t + 1),
                    Sign::Positive => (n, t + 1),
                    Sign::Neutral => (n, t),
                });
        if non_neutral == 0 {
            excluded += 1;
            continue;
        }
        counts[share_bin(neg as f64 / non_neutral as f64)] += 1;
    }
    NegativeShareHistogram {
        threshold,
        counts,
        excluded_neutral_only: excluded,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HitStats {
    pub quarters: usize,
    pub correct: f64,
    pub over: f64,
    pub under: f64,
}

/// How often the baseline hits, overshoots or undershoots the release on the grid.
pub fn baseline_hit_stats(
    baseline: &BaselineSeries,
    actuals: &ActualSeries,
    grid: f64,
) -> Result<HitStats> {
    let (mut correct, mut over, mut under) = (0usize, 0usize, 0usize);
    for (q, &b) in &baseline.values {
        let Some(y) = actuals.get(*q) else { continue };
        let (bi, yi) = if grid > 0.0 {
            (grid_index(b, grid) as f64, grid_index(y, grid) as f64)
        } else {
            (b, y)
        };
        if bi == yi {
            correct += 1;
        } else if bi > yi {
            over += 1;
        } else {
            under += 1;
        }
    }
    let n = correct + over + under;
    if n == 0 {
        return Err(Error::Empty("baseline and actuals share no quarter"));
    }
    let nf = n as f64;
    Ok(HitStats {
        quarters: n,
        correct: correct as f64 / nf,
        over: over as f64 / nf,
        under: under as f64 / nf,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::ForecastRecord;
    use alloc::string::ToString;
    use alloc::vec;
    use proptest::prelude::*;

    fn q(t: i64) -> Quarter {
        Quarter::from_ordinal(8000 + t)
    }

    fn rec(e: &str, t: i64, v: f64) -> ForecastRecord {
        ForecastRecord {
            economist_id: e.to_string(),
            firm_id: String::new(),
            quarter: q(t),
            release: ReleaseKind::First,
            value: v,
            report_date: None,
        }
    }

    fn panel_of(values: &[f64]) -> ForecastPanel {
        let recs = values
            .iter()
            .enumerate()
            .map(|(i, &v)| rec(&alloc::format!("e{i}"), 0, v))
            .collect();
        ForecastPanel::new(recs).unwrap()
    }

    #[test]
    fn baseline_examples() {
        let b = |v: &[f64], m| baseline(&panel_of(v), ReleaseKind::First, m).values[&q(0)];
        assert_eq!(b(&[2.0, 3.0, 4.0], BaselineMethod::Median), 3.0);
        assert_eq!(b(&[2.0, 4.0], BaselineMethod::Median), 3.0);
        assert_eq!(b(&[1.0, 2.0, 6.0], BaselineMethod::Mean), 3.0);
    }

    fn single(forecast: f64, base: f64) -> Judgment {
        let panel = ForecastPanel::new(vec![rec("a", 0, forecast)]).unwrap();
        let bs = BaselineSeries {
            release: ReleaseKind::First,
            method: BaselineMethod::Median,
            values: [(q(0), base)].into_iter().collect(),
        };
        extract_judgments(&panel, &bs, DEFAULT_GRID)
            .unwrap()
            .get("a", q(0), ReleaseKind::First)
            .unwrap()
    }

    #[test]
    fn judgment_examples() {
        let j = single(3.2, 3.0);
        assert!((j.value - 0.2).abs() < 1e-12 && !j.neutral);
        assert_eq!(
            single(3.0, 3.0),
            Judgment {
                value: 0.0,
                neutral: true
            }
        );
        let j = single(3.04, 3.01);
        assert!((j.value - 0.03).abs() < 1e-12 && j.neutral);
    }

    #[test]
    fn missing_baseline_is_an_error() {
        let panel = ForecastPanel::new(vec![rec("a", 1, 1.0)]).unwrap();
        let bs = BaselineSeries {
            release: ReleaseKind::First,
            method: BaselineMethod::Median,
            values: QuarterlySeries::new(),
        };
        assert_eq!(
            extract_judgments(&panel, &bs, DEFAULT_GRID),
            Err(Error::MissingBaseline { quarter: q(1) })
        );
    }

    #[test]
    fn grid_rounding_is_stable_at_halves() {
        assert_eq!(grid_index(3.05, 0.1), 31);
        assert_eq!(grid_index(-3.05, 0.1), -31);
        assert_eq!(grid_index(0.15, 0.1), 2);
        assert_eq!(round_to_grid(2.04, 0.1), 2.0);
        assert_eq!(round_to_grid(0.3, 0.1), 0.3);
    }

    fn jp_from(entries: &[(&str, i64, f64, bool)]) -> (JudgmentPanel, ForecastPanel) {
        let mut map = BTreeMap::new();
        let mut recs = Vec::new();
        for &(e, t, v, n) in entries {
            map.insert(
                (e.to_string(), q(t), ReleaseKind::First),
                Judgment {
                    value: v,
                    neutral: n,
                },
            );
            recs.push(rec(e, t, v));
        }
        (
            JudgmentPanel {
                grid: DEFAULT_GRID,
                entries: map,
            },
            ForecastPanel::new(recs).unwrap(),
        )
    }

    fn sample3() -> QuarterRange {
        QuarterRange::new(q(0), q(2)).unwrap()
    }

    #[test]
    fn sign_share_examples() {
        let th = [ParticipationThreshold::at_least(0.1)];
        let (jp, p) = jp_from(&[
            ("a", 0, -0.2, false),
            ("a", 1, 0.2, false),
            ("a", 2, 0.0, true),
        ]);
        let s = &sign_shares(&jp, &p, ReleaseKind::First, &sample3(), &th)[0];
        let m = s.mean.unwrap();
        assert!((m.negative - 1.0 / 3.0).abs() < 1e-15);
        assert!((m.positive - 1.0 / 3.0).abs() < 1e-15);
        assert!((m.neutral - 1.0 / 3.0).abs() < 1e-15);

        let (jp, p) = jp_from(&[("a", 0, 0.0, true), ("a", 1, 0.01, true)]);
        let m = sign_shares(&jp, &p, ReleaseKind::First, &sample3(), &th)[0]
            .mean
            .unwrap();
        assert_eq!(
            m,
            SignTriple {
                negative: 0.0,
                positive: 0.0,
                neutral: 1.0
            }
        );

        let (jp, p) = jp_from(&[("a", 0, -0.3, false), ("b", 0, 0.3, false)]);
        let s = &sign_shares(&jp, &p, ReleaseKind::First, &sample3(), &th)[0];
        assert_eq!(
            s.mean.unwrap(),
            SignTriple {
                negative: 0.5,
                positive: 0.5,
                neutral: 0.0
            }
        );
        let sd = s.std_dev.unwrap();
        assert_eq!((sd.negative, sd.positive), (0.5, 0.5));

        let none = &sign_shares(
            &jp,
            &p,
            ReleaseKind::First,
            &sample3(),
            &[ParticipationThreshold::at_least(0.9)],
        )[0];
        assert_eq!((none.economists, none.mean), (0, None));
    }

    #[test]
    fn histogram_examples() {
        let th = ParticipationThreshold::at_least(0.1);
        let (jp, p) = jp_from(&[
            ("a", 0, -0.2, false),
            ("a", 1, -0.2, false),
            ("a", 2, 0.2, false),
            ("a", 3, 0.2, false),
            ("b", 0, -0.2, false),
            ("c", 0, 0.0, true),
        ]);
        let sample = QuarterRange::new(q(0), q(3)).unwrap();
        let h = negative_share_histogram(&jp, &p, ReleaseKind::First, &sample, th);
        assert_eq!(h.counts, [0, 0, 1, 0, 1]);
        assert_eq!(h.excluded_neutral_only, 1);
        assert_eq!(share_bin(0.2), 0);
        assert_eq!(share_bin(0.5), 2);
        assert_eq!(share_bin(1.0), 4);
    }

    #[test]
    fn hit_stat_examples() {
        let series = |v: &[f64]| -> QuarterlySeries {
            v.iter()
                .enumerate()
                .map(|(i, &x)| (q(i as i64), x))
                .collect()
        };
        let bs = |v: &[f64]| BaselineSeries {
            release: ReleaseKind::First,
            method: BaselineMethod::Median,
            values: series(v),
        };
        let act = |v: &[f64]| ActualSeries::new(ReleaseKind::First, series(v));

        let h = baseline_hit_stats(&bs(&[2.0, 3.0]), &act(&[2.0, 2.5]), DEFAULT_GRID).unwrap();
        assert_eq!((h.correct, h.over, h.under), (0.5, 0.5, 0.0));
        let h = baseline_hit_stats(&bs(&[1.0, 1.5]), &act(&[1.0, 1.5]), DEFAULT_GRID).unwrap();
        assert_eq!(h.correct, 1.0);
        let h = baseline_hit_stats(&bs(&[1.2, 1.7]), &act(&[1.0, 1.5]), DEFAULT_GRID).unwrap();
        assert_eq!(h.over, 1.0);
        let empty = ActualSeries::new(ReleaseKind::First, QuarterlySeries::new());
        assert!(baseline_hit_stats(&bs(&[1.0]), &empty, DEFAULT_GRID).is_err());
    }

    #[test]
    fn leave_one_out_excludes_own_forecast() {
        let p = panel_of(&[1.0, 2.0, 6.0]);
        let jp = extract_judgments_leave_one_out(
            &p,
            ReleaseKind::First,
            BaselineMethod::Mean,
            DEFAULT_GRID,
        );
        // e2: baseline mean(1, 2) = 1.5
        assert_eq!(jp.get("e2", q(0), ReleaseKind::First).unwrap().value, 4.5);
    }

    proptest! {
        #[test]
        fn median_balance_and_shift_invariance(values in prop::collection::vec(-50i32..50, 1..30), shift in -20i32..20) {
            let vals: Vec<f64> = values.iter().map(|&v| f64::from(v) / 10.0).collect();
            let p = panel_of(&vals);
            let b = baseline(&p, ReleaseKind::First, BaselineMethod::Median);
            let jp = extract_judgments(&p, &b, DEFAULT_GRID).unwrap();
            let n = vals.len() as f64;
            let neg = jp.iter().filter(|(_, j)| j.value < 0.0).count() as f64;
            let pos = jp.iter().filter(|(_, j)| j.value > 0.0).count() as f64;
            prop_assert!(neg <= n / 2.0 && pos <= n / 2.0);

            let c = f64::from(shift) / 10.0;
            let shifted = panel_of(&vals.iter().map(|v| v + c).collect::<Vec<_>>());
            let b2 = baseline(&shifted, ReleaseKind::First, BaselineMethod::Median);
            prop_assert!((b2.values[&q(0)] - b.values[&q(0)] - c).abs() < 1e-9);
            let jp2 = extract_judgments(&shifted, &b2, DEFAULT_GRID).unwrap();
            for (k, j) in jp.iter() {
                prop_assert!((jp2.entries[k].value - j.value).abs() < 1e-9);
            }
        }
    }
}
