//! Forecast panels and release series: the data model, deterministic
//! cleaning and participation accounting.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use libm::fabs;

use crate::quarter::{Date, Quarter, QuarterRange, ReleaseKind};
use crate::{Error, Result};

/// A quarterly time series. Missing quarters are simply absent.
pub type QuarterlySeries = BTreeMap<Quarter, f64>;

/// Published growth rates of one release vintage.
#[derive(Debug, Clone, PartialEq)]
pub struct ActualSeries {
    pub release: ReleaseKind,
    pub values: QuarterlySeries,
    /// Quarters whose value was filled in rather than observed.
    pub filled: BTreeSet<Quarter>,
}

impl ActualSeries {
    pub fn new(release: ReleaseKind, values: QuarterlySeries) -> Self {
        Self {
            release,
            values,
            filled: BTreeSet::new(),
        }
    }

    /// Builds a series from `(quarter, value)` rows, rejecting duplicates.
    pub fn from_rows(
        release: ReleaseKind,
        rows: impl IntoIterator<Item = (Quarter, f64)>,
    ) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (q, v) in rows {
            if values.insert(q, v).is_some() {
                return Err(Error::DuplicateActual {
                    quarter: q,
                    release: release.number(),
                });
            }
        }
        Ok(Self::new(release, values))
    }

    pub fn get(&self, q: Quarter) -> Option<f64> {
        self.values.get(&q).copied()
    }

    pub fn span(&self) -> Option<QuarterRange> {
        let first = *self.values.keys().next()?;
        let last = *self.values.keys().next_back()?;
        Some(QuarterRange { first, last })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastRecord {
    pub economist_id: String,
    pub firm_id: String,
    pub quarter: Quarter,
    pub release: ReleaseKind,
    pub value: f64,
    pub report_date: Option<Date>,
}

impl ForecastRecord {
    pub fn is_attributed(&self) -> bool {
        !self.economist_id.trim().is_empty()
    }
}

type PanelKey = (String, Quarter, ReleaseKind);

/// An unbalanced panel of point backcasts.
///
/// Records keep their input order; the index maps each
/// `(economist, quarter, release)` key to the positions holding it.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ForecastPanel {
    records: Vec<ForecastRecord>,
    index: BTreeMap<PanelKey, Vec<usize>>,
}

impl ForecastPanel {
    pub fn new(records: Vec<ForecastRecord>) -> Result<Self> {
        let mut index: BTreeMap<PanelKey, Vec<usize>> = BTreeMap::new();
        for (pos, r) in records.iter().enumerate() {
            if !r.value.is_finite() {
                return Err(Error::NonFiniteValue {
                    economist: r.economist_id.clone(),
                    quarter: r.quarter,
                });
            }
            index
                .entry((r.economist_id.clone(), r.quarter, r.release))
                .or_default()
                .push(pos);
        }
        Ok(Self { records, index })
    }

    pub fn records(&self) -> &[ForecastRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// First record stored under the key; after cleaning it is the only one.
    pub fn get(
        &self,
        economist: &str,
        quarter: Quarter,
        release: ReleaseKind,
    ) -> Option<&ForecastRecord> {
        self.index
            .get(&(String::from(economist), quarter, release))
            .and_then(|p| p.first())
            .map(|&p| &self.records[p])
    }

    pub fn has_duplicates(&self) -> bool {
        self.index.values().any(|p| p.len() > 1)
    }

    /// Values reported for one quarter and release, in input order.
    pub fn cross_section(&self, quarter: Quarter, release: ReleaseKind) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.quarter == quarter && r.release == release)
            .map(|r| r.value)
            .collect()
    }

    /// All cross-sections of a release keyed by quarter.
    pub fn cross_sections(&self, release: ReleaseKind) -> BTreeMap<Quarter, Vec<f64>> {
        let mut out: BTreeMap<Quarter, Vec<f64>> = BTreeMap::new();
        for r in self.records.iter().filter(|r| r.release == release) {
            out.entry(r.quarter).or_default().push(r.value);
        }
        out
    }

    pub fn quarters(&self, release: ReleaseKind) -> BTreeSet<Quarter> {
        self.records
            .iter()
            .filter(|r| r.release == release)
            .map(|r| r.quarter)
            .collect()
    }

    pub fn economists(&self) -> BTreeSet<&str> {
        self.records
            .iter()
            .filter(|r| r.is_attributed())
            .map(|r| r.economist_id.as_str())
            .collect()
    }

    /// One economist's forecasts of a release as a time series.
    pub fn series_of(&self, economist: &str, release: ReleaseKind) -> QuarterlySeries {
        self.records
            .iter()
            .filter(|r| r.release == release && r.economist_id == economist)
            .map(|r| (r.quarter, r.value))
            .collect()
    }

    /// Keeps only records whose quarter lies in `range`.
    pub fn restrict(&self, range: &QuarterRange) -> ForecastPanel {
        let records = self
            .records
            .iter()
            .filter(|r| range.contains(r.quarter))
            .cloned()
            .collect();
        // values were validated on construction
        ForecastPanel::new(records).expect("subset of a valid panel")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CleaningAction {
    DroppedDuplicate,
    ReassignedFirm,
    DroppedUnattributed,
}

impl CleaningAction {
    pub fn as_str(self) -> &'static str {
        match self {
            CleaningAction::DroppedDuplicate => "dropped-duplicate",
            CleaningAction::ReassignedFirm => "reassigned-firm",
            CleaningAction::DroppedUnattributed => "dropped-unattributed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CleaningEntry {
    pub action: CleaningAction,
    pub original: ForecastRecord,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CleaningLog {
    pub entries: Vec<CleaningEntry>,
}

impl CleaningLog {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dropped(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| e.action != CleaningAction::ReassignedFirm)
            .count()
    }

    pub fn count(&self, action: CleaningAction) -> usize {
        self.entries.iter().filter(|e| e.action == action).count()
    }
}

/// Removes unattributed records, resolves duplicate keys and separates
/// distinct economists sharing a firm id in the same quarter.
///
/// Among duplicates of one `(economist, quarter, release)` key the survivor is
/// the record with the latest report date (undated counts as earliest), then
/// the one closest to the raw cross-sectional median of that quarter, then the
/// earliest in input order. Firm conflicts keep the first economist's firm id
/// and rename the others to `firm/economist`.
pub fn clean_panel(raw: &ForecastPanel) -> (ForecastPanel, CleaningLog) {
    let mut log = CleaningLog::default();

    let medians: BTreeMap<(Quarter, ReleaseKind), f64> = {
        let mut groups: BTreeMap<(Quarter, ReleaseKind), Vec<f64>> = BTreeMap::new();
        for r in raw.records() {
            groups
                .entry((r.quarter, r.release))
                .or_default()
                .push(r.value);
        }
        groups
            .into_iter()
            .map(|(k, mut v)| (k, median_in_place(&mut v)))
            .collect()
    };

    let mut keep = alloc::vec![true; raw.len()];
    for (pos, r) in raw.records().iter().enumerate() {
        if !r.is_attributed() {
            keep[pos] = false;
            log.entries.push(CleaningEntry {
                action: CleaningAction::DroppedUnattributed,
                original: r.clone(),
            });
        }
    }

    for ((_, quarter, release), positions) in &raw.index {
        let live: Vec<usize> = positions.iter().copied().filter(|&p| keep[p]).collect();
        if live.len() < 2 {
            continue;
        }
        let median = medians[&(*quarter, *release)];
        let winner = *live
            .iter()
            .min_by(|&&a, &&b| {
                let (ra, rb) = (&raw.records[a], &raw.records[b]);
                rb.report_date
                    .cmp(&ra.report_date)
                    .then(fabs(ra.value - median).total_cmp(&fabs(rb.value - median)))
                    .then(a.cmp(&b))
            })
            .expect("at least two candidates");
        for &p in &live {
            if p != winner {
                keep[p] = false;
                log.entries.push(CleaningEntry {
                    action: CleaningAction::DroppedDuplicate,
                    original: raw.records[p].clone(),
                });
            }
        }
    }

    let mut cleaned: Vec<ForecastRecord> = raw
        .records()
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(r, _)| r.clone())
        .collect();

    // firm id conflicts: first economist (input order) keeps the id
    let mut owner: BTreeMap<(String, Quarter, ReleaseKind), String> = BTreeMap::new();
    for r in cleaned.iter_mut() {
        if r.firm_id.trim().is_empty() {
            continue;
        }
        let key = (r.firm_id.clone(), r.quarter, r.release);
        match owner.get(&key) {
            None => {
                owner.insert(key, r.economist_id.clone());
            }
            Some(first) if *first == r.economist_id => {}
            Some(_) => {
                log.entries.push(CleaningEntry {
                    action: CleaningAction::ReassignedFirm,
                    original: r.clone(),
                });
                r.firm_id = alloc::format!("{}/{}", r.firm_id, r.economist_id);
            }
        }
    }

    let panel = ForecastPanel::new(cleaned).expect("subset of a valid panel");
    (panel, log)
}

/// Median with the midpoint rule for even counts. Reorders `values`.
pub fn median_in_place(values: &mut [f64]) -> f64 {
    debug_assert!(!values.is_empty());
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// A participation requirement on the share of sample quarters covered.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticipationThreshold {
    pub share: f64,
    /// `true`: strictly more than `share`; `false`: at least `share`.
    pub strict: bool,
}

impl ParticipationThreshold {
    pub fn at_least(share: f64) -> Self {
        Self {
            share,
            strict: false,
        }
    }

    pub fn more_than(share: f64) -> Self {
        Self {
            share,
            strict: true,
        }
    }

    /// The 10% requirement is strict, the larger ones inclusive.
    pub fn standard(share: f64) -> Self {
        if share <= 0.10 + 1e-12 {
            Self::more_than(share)
        } else {
            Self::at_least(share)
        }
    }

    pub fn defaults() -> [ParticipationThreshold; 3] {
        [
            Self::standard(0.10),
            Self::standard(0.25),
            Self::standard(0.50),
        ]
    }

    pub fn admits(&self, participation: f64) -> bool {
        // guard against representation error in share * n comparisons
        const SLACK: f64 = 1e-12;
        if self.strict {
            participation > self.share + SLACK
        } else {
            participation >= self.share - SLACK
        }
    }
}

/// Fraction of sample quarters in which the economist reported this release.
pub fn participation_share(
    panel: &ForecastPanel,
    economist: &str,
    release: ReleaseKind,
    sample: &QuarterRange,
) -> f64 {
    let covered: BTreeSet<Quarter> = panel
        .records()
        .iter()
        .filter(|r| {
            r.economist_id == economist && r.release == release && sample.contains(r.quarter)
        })
        .map(|r| r.quarter)
        .collect();
    covered.len() as f64 / sample.len() as f64
}

/// Economists whose participation in `release` meets `threshold`.
pub fn qualifying_economists(
    panel: &ForecastPanel,
    release: ReleaseKind,
    sample: &QuarterRange,
    threshold: ParticipationThreshold,
) -> Vec<String> {
    let mut counts: BTreeMap<&str, BTreeSet<Quarter>> = BTreeMap::new();
    for r in panel.records() {
        if r.release == release && r.is_attributed() && sample.contains(r.quarter) {
            counts
                .entry(r.economist_id.as_str())
                .or_default()
                .insert(r.quarter);
        }
    }
    counts
        .into_iter()
        .filter(|(_, qs)| threshold.admits(qs.len() as f64 / sample.len() as f64))
        .map(|(e, _)| String::from(e))
        .collect()
}

/// Economist-quarter cells holding forecasts of several releases at once.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct JointCoverage {
    pub first_second: usize,
    pub first_third: usize,
    pub second_third: usize,
    pub all_three: usize,
}

/// Counts `(economist, quarter)` cells whose release set contains each pair
/// and the full triple. A cell with all three releases counts in every pair.
pub fn joint_coverage(panel: &ForecastPanel) -> JointCoverage {
    let mut cells: BTreeMap<(&str, Quarter), [bool; 3]> = BTreeMap::new();
    for r in panel.records() {
        cells
            .entry((r.economist_id.as_str(), r.quarter))
            .or_default()[r.release.index()] = true;
    }
    let mut out = JointCoverage::default();
    for has in cells.values() {
        out.first_second += usize::from(has[0] && has[1]);
        out.first_third += usize::from(has[0] && has[2]);
        out.second_third += usize::from(has[1] && has[2]);
        out.all_three += usize::from(has[0] && has[1] && has[2]);
    }
    out
}

/// Predictions and participation by release.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticipationRow {
    pub release: ReleaseKind,
    pub predictions: usize,
    pub economists: usize,
    /// Economists meeting each threshold, in threshold order.
    pub meeting_threshold: Vec<usize>,
}

/// Participation counts per release for a cleaned panel.
pub fn participation_table(
    panel: &ForecastPanel,
    sample: &QuarterRange,
    thresholds: &[ParticipationThreshold],
) -> Vec<ParticipationRow> {
    ReleaseKind::ALL
        .iter()
        .map(|&release| {
            let recs: Vec<&ForecastRecord> = panel
                .records()
                .iter()
                .filter(|r| r.release == release && r.is_attributed() && sample.contains(r.quarter))
                .collect();
            let economists: BTreeSet<&str> = recs.iter().map(|r| r.economist_id.as_str()).collect();
            ParticipationRow {
                release,
                predictions: recs.len(),
                economists: economists.len(),
                meeting_threshold: thresholds
                    .iter()
                    .map(|&t| qualifying_economists(panel, release, sample, t).len())
                    .collect(),
            }
        })
        .collect()
}
