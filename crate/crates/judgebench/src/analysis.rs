//! One function per analysis command. Each returns its artifacts and the
//! diagnostics raised by cells that could not be computed; nothing here
//! touches the file system.

use std::collections::BTreeMap;

use judgebench_core::accuracy::{beat_baseline_share, compare_all, AccuracyComparison};
use judgebench_core::armodel::{
    fill_missing, recursive_ar_forecast, ArForecast, DEFAULT_GAP_LIMIT,
};
use judgebench_core::descriptive::{quarter_stats, rmse_series, summarize, QuarterStats, Summary};
use judgebench_core::judgment::{
    baseline, baseline_hit_stats, extract_judgments, extract_judgments_leave_one_out,
    negative_share_histogram, sign_shares, BaselineMethod, BaselineSeries, JudgmentPanel,
    SignTriple,
};
use judgebench_core::linreg::{
    test_battery_aggregate, test_battery_individual, AggregateInputs, BatteryOptions,
    IndividualInputs, JointTestResult,
};
use judgebench_core::panel::{
    joint_coverage, participation_table, CleaningLog, ParticipationThreshold,
};
use judgebench_core::panelreg::{persistence_battery, FeSpec, PanelFitResult, PersistenceTable};
use judgebench_core::{ActualSeries, ForecastPanel, Quarter, QuarterlySeries, ReleaseKind};

use crate::config::Settings;
use crate::io::SpfNowcasts;
use crate::output::{fmt_f64, fmt_opt, Artifact, CsvTable};

/// Marker written into a table cell whose computation failed.
pub const ERROR_CELL: &str = "ERROR";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub command: &'static str,
    pub scope: String,
    pub message: String,
}

impl Diagnostic {
    fn new(command: &'static str, scope: impl Into<String>, message: impl ToString) -> Self {
        Self {
            command,
            scope: scope.into(),
            message: message.to_string(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub diagnostics: Vec<Diagnostic>,
}

impl Outcome {
    fn push(&mut self, name: &str, table: &CsvTable) {
        self.artifacts.push(Artifact::table(name, table));
    }

    fn warn(&mut self, command: &'static str, scope: impl Into<String>, message: impl ToString) {
        self.diagnostics
            .push(Diagnostic::new(command, scope, message));
    }

    pub fn absorb(&mut self, other: Outcome) {
        self.artifacts.extend(other.artifacts);
        self.diagnostics.extend(other.diagnostics);
    }
}

pub fn diagnostics_table(diagnostics: &[Diagnostic]) -> CsvTable {
    let mut t = CsvTable::new(None, &["command", "scope", "message"]);
    for d in diagnostics {
        t.row([d.command.to_string(), d.scope.clone(), d.message.clone()]);
    }
    t
}

/// Column label such as `gt0.1` or `ge0.25`.
pub fn threshold_label(t: &ParticipationThreshold) -> String {
    format!("{}{}", if t.strict { "gt" } else { "ge" }, fmt_f64(t.share))
}

fn release_label(k: ReleaseKind) -> &'static str {
    match k {
        ReleaseKind::First => "first",
        ReleaseKind::Second => "second",
        ReleaseKind::Third => "third",
    }
}

/// Data shared by the analysis commands. The panel is cleaned and
/// restricted to the sample.
#[derive(Debug, Clone)]
pub struct Dataset<'a> {
    pub settings: &'a Settings,
    pub panel: &'a ForecastPanel,
    pub cleaning: &'a CleaningLog,
    pub actuals: Option<&'a [ActualSeries; 3]>,
    pub spf: Option<&'a SpfNowcasts>,
}

impl Dataset<'_> {
    fn actual(&self, k: ReleaseKind) -> Option<&ActualSeries> {
        self.actuals.map(|a| &a[k.index()])
    }

    fn actual_values(&self) -> BTreeMap<ReleaseKind, QuarterlySeries> {
        ReleaseKind::ALL
            .iter()
            .filter_map(|&k| self.actual(k).map(|a| (k, a.values.clone())))
            .collect()
    }

    fn baseline(&self, k: ReleaseKind, method: BaselineMethod) -> BaselineSeries {
        baseline(self.panel, k, method)
    }
}

fn summary_cells(s: Option<Summary>) -> [String; 3] {
    match s {
        Some(s) => [fmt_f64(s.mean), fmt_f64(s.min), fmt_f64(s.max)],
        None => ["NA".into(), "NA".into(), "NA".into()],
    }
}

pub fn describe(data: &Dataset<'_>) -> Outcome {
    const CMD: &str = "describe";
    let s = data.settings;
    let mut out = Outcome::default();

    let mut per_release: [Vec<QuarterStats>; 3] = Default::default();
    for k in ReleaseKind::ALL {
        let Some(actual) = data.actual(k) else {
            continue;
        };
        let report = quarter_stats(data.panel, actual, k, s.moments);
        for q in report.missing_actual {
            out.warn(
                CMD,
                format!("release {k} {q}"),
                "quarter has forecasts but no actual value; excluded",
            );
        }
        per_release[k.index()] = report.stats;
    }

    let mut quarters = CsvTable::new(
        None,
        &[
            "release",
            "quarter",
            "n",
            "rmse",
            "std_dev",
            "skewness",
            "excess_kurtosis",
        ],
    );
    let mut table1 = CsvTable::new(
        Some("Table 1: descriptive statistics of the backcasts by release; averages across quarters with min and max; kurtosis is excess kurtosis"),
        &["release", "statistic", "average", "min", "max"],
    );
    for k in ReleaseKind::ALL {
        let stats = &per_release[k.index()];
        for st in stats {
            quarters.row([
                k.to_string(),
                st.quarter.to_string(),
                st.n.to_string(),
                fmt_f64(st.rmse),
                fmt_f64(st.std_dev),
                fmt_opt(st.skewness),
                fmt_opt(st.excess_kurtosis),
            ]);
        }
        if stats.is_empty() {
            out.warn(
                CMD,
                format!("release {k}"),
                "no quarter with both forecasts and an actual value",
            );
        }
        let sum = summarize(stats);
        for (name, cell) in [
            ("predictions", sum.n),
            ("rmse", sum.rmse),
            ("std_dev", sum.std_dev),
            ("skewness", sum.skewness),
            ("excess_kurtosis", sum.excess_kurtosis),
        ] {
            let [a, b, c] = summary_cells(cell);
            table1.row([k.to_string(), name.to_string(), a, b, c]);
        }
    }

    let series = rmse_series([&per_release[0], &per_release[1], &per_release[2]]);
    let mut fig2 = CsvTable::new(None, &["quarter", "rmse_1", "rmse_2", "rmse_3"]);
    for (i, q) in series.quarters.iter().enumerate() {
        fig2.row([
            q.to_string(),
            fmt_opt(series.values[0][i]),
            fmt_opt(series.values[1][i]),
            fmt_opt(series.values[2][i]),
        ]);
    }

    let mut table2 = CsvTable::new(
        Some("Table 2: predictions by attributed economists; joint rows count economist-quarter cells"),
        &["row", "release_1", "release_2", "release_3"],
    );
    let participation = participation_table(data.panel, &s.sample, &s.thresholds);
    table2.row(
        std::iter::once("predictions".to_string())
            .chain(participation.iter().map(|r| r.predictions.to_string())),
    );
    table2.row(
        std::iter::once("economists".to_string())
            .chain(participation.iter().map(|r| r.economists.to_string())),
    );
    let joint = joint_coverage(data.panel);
    let na = || "NA".to_string();
    for (name, count, members) in [
        ("joint_1_2", joint.first_second, [true, true, false]),
        ("joint_1_3", joint.first_third, [true, false, true]),
        ("joint_2_3", joint.second_third, [false, true, true]),
        ("joint_1_2_3", joint.all_three, [true, true, true]),
    ] {
        table2.row(
            std::iter::once(name.to_string()).chain(members.iter().map(|&m| {
                if m {
                    count.to_string()
                } else {
                    na()
                }
            })),
        );
    }
    for (i, t) in s.thresholds.iter().enumerate() {
        table2.row(
            std::iter::once(format!("economists_{}", threshold_label(t))).chain(
                participation
                    .iter()
                    .map(|r| r.meeting_threshold[i].to_string()),
            ),
        );
    }

    let mut cleaning = CsvTable::new(
        None,
        &[
            "action",
            "quarter",
            "release",
            "economist_id",
            "firm_id",
            "value",
            "report_date",
        ],
    );
    for e in &data.cleaning.entries {
        let r = &e.original;
        cleaning.row([
            e.action.as_str().to_string(),
            r.quarter.to_string(),
            r.release.to_string(),
            r.economist_id.clone(),
            r.firm_id.clone(),
            fmt_f64(r.value),
            r.report_date.map(|d| d.to_string()).unwrap_or_default(),
        ]);
    }

    out.push("table1.csv", &table1);
    out.push("describe_quarters.csv", &quarters);
    out.push("fig2_rmse.csv", &fig2);
    out.push("table2.csv", &table2);
    out.push("cleaning_log.csv", &cleaning);
    out
}

/// Judgments of every release against the configured baseline, optionally
/// leaving each forecaster's own forecast out of it.
pub fn judgment_panel(
    data: &Dataset<'_>,
    diagnostics: &mut Vec<Diagnostic>,
    command: &'static str,
) -> JudgmentPanel {
    let s = data.settings;
    let mut jp = JudgmentPanel {
        grid: s.grid,
        entries: BTreeMap::new(),
    };
    for k in ReleaseKind::ALL {
        let part = if s.leave_one_out {
            Ok(extract_judgments_leave_one_out(
                data.panel, k, s.baseline, s.grid,
            ))
        } else {
            extract_judgments(data.panel, &data.baseline(k, s.baseline), s.grid)
        };
        match part {
            Ok(part) => jp.extend(part),
            Err(e) => diagnostics.push(Diagnostic::new(command, format!("release {k}"), e)),
        }
    }
    jp
}

fn triple_cells(t: Option<SignTriple>) -> [String; 3] {
    match t {
        Some(t) => [fmt_f64(t.negative), fmt_f64(t.positive), fmt_f64(t.neutral)],
        None => [na(), na(), na()],
    }
}

fn na() -> String {
    "NA".into()
}

pub fn judgment(data: &Dataset<'_>) -> Outcome {
    const CMD: &str = "judgment";
    let s = data.settings;
    let mut out = Outcome::default();
    let jp = judgment_panel(data, &mut out.diagnostics, CMD);

    let mut base = CsvTable::new(None, &["quarter", "release", "method", "value"]);
    let mut hits = CsvTable::new(None, &["release", "quarters", "correct", "over", "under"]);
    for k in ReleaseKind::ALL {
        let b = data.baseline(k, s.baseline);
        for (q, v) in &b.values {
            base.row([
                q.to_string(),
                k.to_string(),
                s.baseline.as_str().to_string(),
                fmt_f64(*v),
            ]);
        }
        if let Some(actual) = data.actual(k) {
            match baseline_hit_stats(&b, actual, s.grid) {
                Ok(h) => hits.row([
                    k.to_string(),
                    h.quarters.to_string(),
                    fmt_f64(h.correct),
                    fmt_f64(h.over),
                    fmt_f64(h.under),
                ]),
                Err(e) => out.warn(CMD, format!("baseline hits release {k}"), e),
            }
        }
    }

    let mut judgments = CsvTable::new(None, &["economist", "quarter", "release", "j", "neutral"]);
    for ((e, q, k), j) in jp.iter() {
        judgments.row([
            e.clone(),
            q.to_string(),
            k.to_string(),
            fmt_f64(j.value),
            u8::from(j.neutral).to_string(),
        ]);
    }

    let mut header = vec!["release".to_string(), "statistic".to_string()];
    for sign in ["negative", "positive", "neutral"] {
        for t in &s.thresholds {
            header.push(format!("{sign}_{}", threshold_label(t)));
        }
    }
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut table3 = CsvTable::new(
        Some(&format!(
            "Table 3: signs of implicit judgments against the {} baseline; mean share across forecasters with cross-forecaster standard deviation",
            s.baseline.as_str()
        )),
        &header_refs,
    );
    let mut fig3 = CsvTable::new(
        None,
        &[
            "release",
            "threshold",
            "bin_0_20",
            "bin_20_40",
            "bin_40_60",
            "bin_60_80",
            "bin_80_100",
            "excluded_neutral_only",
        ],
    );
    for k in ReleaseKind::ALL {
        let shares = sign_shares(&jp, data.panel, k, &s.sample, &s.thresholds);
        for (name, pick) in [
            (
                "mean",
                (|x: &judgebench_core::judgment::SignShares| x.mean) as fn(&_) -> _,
            ),
            ("std_dev", |x| x.std_dev),
        ] {
            let cells: Vec<[String; 3]> = shares.iter().map(|x| triple_cells(pick(x))).collect();
            let mut row = vec![k.to_string(), name.to_string()];
            for sign in 0..3 {
                row.extend(cells.iter().map(|c| c[sign].clone()));
            }
            table3.row(row);
        }
        let mut row = vec![k.to_string(), "forecasters".to_string()];
        for _ in 0..3 {
            row.extend(shares.iter().map(|x| x.economists.to_string()));
        }
        table3.row(row);

        for t in &s.thresholds {
            let h = negative_share_histogram(&jp, data.panel, k, &s.sample, *t);
            fig3.row(
                [k.to_string(), threshold_label(t)]
                    .into_iter()
                    .chain(h.counts.iter().map(|c| c.to_string()))
                    .chain([h.excluded_neutral_only.to_string()]),
            );
        }
    }

    out.push("baseline.csv", &base);
    out.push("judgment.csv", &judgments);
    out.push("table3.csv", &table3);
    out.push("baseline_hits.csv", &hits);
    out.push("fig3_histogram.csv", &fig3);
    out
}

/// Recursive AR forecasts for every sample quarter with an actual value,
/// one release at a time. A release that cannot be forecast is reported
/// and left empty.
pub fn ar_forecasts(
    data: &Dataset<'_>,
    diagnostics: &mut Vec<Diagnostic>,
    command: &'static str,
) -> BTreeMap<ReleaseKind, BTreeMap<Quarter, ArForecast>> {
    let s = data.settings;
    let mut all = BTreeMap::new();
    for k in ReleaseKind::ALL {
        let Some(actual) = data.actual(k) else {
            continue;
        };
        let targets: Vec<Quarter> = s
            .sample
            .iter()
            .filter(|q| actual.values.contains_key(q))
            .collect();
        let result = fill_missing(actual, None, DEFAULT_GAP_LIMIT).and_then(|filled| {
            for q in &filled.filled {
                diagnostics.push(Diagnostic::new(
                    command,
                    format!("release {k} {q}"),
                    "actual value interpolated for AR estimation",
                ));
            }
            recursive_ar_forecast(&filled.values, &targets, &s.ar)
        });
        match result {
            Ok(f) => {
                all.insert(k, f);
            }
            Err(e) => {
                diagnostics.push(Diagnostic::new(command, format!("AR release {k}"), e));
                all.insert(k, BTreeMap::new());
            }
        }
    }
    all
}

pub fn ar_forecast_command(data: &Dataset<'_>) -> Outcome {
    let mut out = Outcome::default();
    let forecasts = ar_forecasts(data, &mut out.diagnostics, "ar-forecast");
    let mut t = CsvTable::new(None, &["quarter", "release", "forecast", "p_used"]);
    for (k, f) in &forecasts {
        for (q, fc) in f {
            t.row([
                q.to_string(),
                k.to_string(),
                fmt_f64(fc.value),
                fc.lag_used.to_string(),
            ]);
        }
    }
    out.push("ar_forecasts.csv", &t);
    out
}

fn p_cell(r: &Result<JointTestResult, judgebench_core::Error>) -> String {
    match r {
        Ok(t) => fmt_f64(t.p_value),
        Err(_) => ERROR_CELL.into(),
    }
}

pub fn efficiency(data: &Dataset<'_>) -> Outcome {
    const CMD: &str = "efficiency";
    let s = data.settings;
    let mut out = Outcome::default();
    let ar: BTreeMap<ReleaseKind, QuarterlySeries> = ar_forecasts(data, &mut out.diagnostics, CMD)
        .into_iter()
        .map(|(k, f)| (k, f.into_iter().map(|(q, fc)| (q, fc.value)).collect()))
        .collect();
    let spf = match data.spf {
        Some(spf) => spf.clone(),
        None => {
            out.warn(
                CMD,
                "spf",
                "no SPF nowcasts given; efficiency tests cannot run",
            );
            SpfNowcasts::new()
        }
    };
    let methods = [BaselineMethod::Median, BaselineMethod::Mean];
    let actuals = data.actual_values();
    let inputs = AggregateInputs {
        actuals: actuals.clone(),
        baselines: ReleaseKind::ALL
            .iter()
            .flat_map(|&k| methods.iter().map(move |&m| (k, m)))
            .map(|(k, m)| ((k, m), data.baseline(k, m).values))
            .collect(),
        spf: spf.clone(),
        ar_forecasts: ar.clone(),
    };
    let cells = test_battery_aggregate(
        &inputs,
        BatteryOptions {
            covariance: s.aggregate_covariance,
            alpha: s.alpha,
        },
    );

    let mut header = vec!["row".to_string()];
    for k in ReleaseKind::ALL {
        for m in methods {
            header.push(format!("{}_{}", release_label(k), m.as_str()));
        }
    }
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut table4 = CsvTable::new(
        Some("Table 4: p-values of HAC F-tests of unbiasedness and efficiency of the median and mean baselines, and their RMSE"),
        &header_refs,
    );
    let mut rows: [Vec<String>; 4] = [
        vec!["unbiasedness".into()],
        vec!["efficiency".into()],
        vec!["rmse".into()],
        vec!["n_obs".into()],
    ];
    for c in &cells {
        let scope = format!("release {} {}", c.release, c.method.as_str());
        if let Err(e) = &c.unbiasedness {
            out.warn(CMD, format!("{scope} unbiasedness"), e);
        }
        if let Err(e) = &c.efficiency {
            out.warn(CMD, format!("{scope} efficiency"), e);
        }
        rows[0].push(p_cell(&c.unbiasedness));
        rows[1].push(p_cell(&c.efficiency));
        rows[2].push(fmt_opt(c.rmse));
        rows[3].push(c.n_obs.to_string());
    }
    for r in rows {
        table4.row(r);
    }

    let empty = QuarterlySeries::new();
    let individual = test_battery_individual(
        &IndividualInputs {
            panel: data.panel,
            actuals: &actuals,
            spf: spf.get(&s.baseline).unwrap_or(&empty),
            ar_forecasts: &ar,
            sample: s.sample,
        },
        &s.thresholds,
        BatteryOptions {
            covariance: s.individual_covariance,
            alpha: s.alpha,
        },
    );
    let mut header = vec!["threshold".to_string()];
    for k in ReleaseKind::ALL {
        for col in ["unbiased", "efficient", "qualifying", "excluded"] {
            header.push(format!("{}_{col}", release_label(k)));
        }
    }
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut table5 = CsvTable::new(
        Some("Table 5: share of qualifying forecasters whose unbiasedness and efficiency are not rejected; excluded counts forecasters with too few observations"),
        &header_refs,
    );
    for t in &s.thresholds {
        let mut row = vec![threshold_label(t)];
        for k in ReleaseKind::ALL {
            let share = individual
                .shares
                .iter()
                .find(|x| x.release == k && x.threshold == *t)
                .expect("one share per threshold and release");
            row.extend([
                fmt_opt(share.share_unbiased),
                fmt_opt(share.share_efficient),
                share.qualifying.to_string(),
                share.excluded.to_string(),
            ]);
        }
        table5.row(row);
    }

    let mut detail = CsvTable::new(
        None,
        &[
            "economist",
            "release",
            "n_obs",
            "alpha",
            "beta",
            "p_unbiased",
            "p_efficient",
            "note",
        ],
    );
    for d in &individual.details {
        detail.row([
            d.economist.clone(),
            d.release.to_string(),
            d.n_obs.to_string(),
            fmt_opt(d.alpha),
            fmt_opt(d.beta),
            fmt_opt(d.p_unbiased),
            fmt_opt(d.p_efficient),
            d.note.clone().unwrap_or_default(),
        ]);
    }

    out.push("table4.csv", &table4);
    out.push("table5.csv", &table5);
    out.push("efficiency_detail.csv", &detail);
    out
}

pub fn accuracy(data: &Dataset<'_>) -> Outcome {
    const CMD: &str = "accuracy";
    let s = data.settings;
    let mut out = Outcome::default();
    let mut detail = CsvTable::new(
        None,
        &[
            "economist_id",
            "release",
            "n_common",
            "rmse_self",
            "rmse_baseline",
            "dm_statistic",
            "hln_statistic",
            "p_value_hln",
        ],
    );
    let mut summary = CsvTable::new(
        Some(&format!(
            "Accuracy against the {} baseline: share of forecasters with lower RMSE and share significantly better under the HLN-corrected DM test at alpha {}",
            s.baseline.as_str(),
            fmt_f64(s.alpha)
        )),
        &["threshold", "release", "forecasters", "share_better", "share_significant"],
    );
    for k in ReleaseKind::ALL {
        let Some(actual) = data.actual(k) else {
            out.warn(CMD, format!("release {k}"), "no actual values");
            continue;
        };
        let comparisons: Vec<AccuracyComparison> = compare_all(
            data.panel,
            &data.baseline(k, s.baseline),
            &actual.values,
            &s.sample,
            s.loss,
        );
        for c in &comparisons {
            if c.dm_statistic.is_none() {
                out.warn(
                    CMD,
                    format!("{} release {k}", c.economist_id),
                    "loss differential is degenerate; DM test not computed",
                );
            }
            detail.row([
                c.economist_id.clone(),
                k.to_string(),
                c.n_common.to_string(),
                fmt_f64(c.rmse_self),
                fmt_f64(c.rmse_baseline),
                fmt_opt(c.dm_statistic),
                fmt_opt(c.hln_statistic),
                fmt_opt(c.p_value_hln),
            ]);
        }
        for b in beat_baseline_share(
            &comparisons,
            data.panel,
            k,
            &s.sample,
            &s.thresholds,
            s.alpha,
        ) {
            summary.row([
                threshold_label(&b.threshold),
                k.to_string(),
                b.forecasters.to_string(),
                fmt_opt(b.share_better),
                fmt_opt(b.share_significant),
            ]);
        }
    }
    out.push("accuracy_detail.csv", &detail);
    out.push("accuracy_summary.csv", &summary);
    out
}

fn persistence_wide(table: &PersistenceTable) -> CsvTable {
    let k = table.release;
    let prior = match k.prior() {
        Some(p) => format!("j{p}_t"),
        None => "j3_t-1".into(),
    };
    let title = format!(
        "Table {}: persistence of release-{k} judgment; columns (1)-(3) own lag j{k}_t-1, (4)-(6) {prior}; standard errors clustered by forecaster",
        5 + k.number()
    );
    let mut t = CsvTable::new(
        Some(&title),
        &["row", "(1)", "(2)", "(3)", "(4)", "(5)", "(6)"],
    );
    let cell = |f: &dyn Fn(&PanelFitResult) -> String| -> Vec<String> {
        table
            .cells
            .iter()
            .map(|c| c.result.as_ref().map_or_else(|_| ERROR_CELL.to_string(), f))
            .collect()
    };
    let plain = |name: &str, cells: Vec<String>| {
        std::iter::once(name.to_string())
            .chain(cells)
            .collect::<Vec<_>>()
    };
    t.row(plain(
        "regressor",
        table
            .cells
            .iter()
            .map(|c| c.kind.as_str().to_string())
            .collect(),
    ));
    t.row(plain("beta", cell(&|r| fmt_f64(r.beta))));
    t.row(plain("se", cell(&|r| fmt_f64(r.se_clustered))));
    t.row(plain("stars", cell(&|r| r.stars().to_string())));
    t.row(plain("p_value", cell(&|r| fmt_f64(r.p_value))));
    t.row(plain(
        "fe",
        table
            .cells
            .iter()
            .map(|c| if c.spec == FeSpec::Pooled { "" } else { "X" }.to_string())
            .collect(),
    ));
    t.row(plain(
        "te",
        table
            .cells
            .iter()
            .map(|c| if c.spec == FeSpec::FeTe { "X" } else { "" }.to_string())
            .collect(),
    ));
    t.row(plain("n_obs", cell(&|r| r.n_obs.to_string())));
    t.row(plain(
        "n_forecasters",
        cell(&|r| r.n_forecasters.to_string()),
    ));
    t.row(plain("r_squared", cell(&|r| fmt_f64(r.r_squared))));
    t
}

pub fn persistence(data: &Dataset<'_>) -> Outcome {
    const CMD: &str = "persistence";
    let mut out = Outcome::default();
    let jp = judgment_panel(data, &mut out.diagnostics, CMD);
    let tables = persistence_battery(&jp);

    let mut detail = CsvTable::new(
        None,
        &[
            "release",
            "column",
            "regressor",
            "spec",
            "beta",
            "se_clustered",
            "p_value",
            "stars",
            "n_obs",
            "n_forecasters",
            "r_squared",
            "r_squared_overall",
            "dropped_singletons",
            "time_effects",
            "error",
        ],
    );
    let mut diag = CsvTable::new(
        None,
        &[
            "release",
            "regressor",
            "n_obs",
            "missing_regressor",
            "broken_chains",
        ],
    );
    for table in &tables {
        let k = table.release;
        out.push(
            &format!("table{}.csv", 5 + k.number()),
            &persistence_wide(table),
        );
        for c in &table.cells {
            let head = [
                k.to_string(),
                format!("({})", c.column),
                c.kind.as_str().into(),
                c.spec.as_str().into(),
            ];
            let rest: [String; 11] = match &c.result {
                Ok(r) => [
                    fmt_f64(r.beta),
                    fmt_f64(r.se_clustered),
                    fmt_f64(r.p_value),
                    r.stars().into(),
                    r.n_obs.to_string(),
                    r.n_forecasters.to_string(),
                    fmt_f64(r.r_squared),
                    fmt_f64(r.r_squared_overall),
                    r.dropped_singletons.to_string(),
                    r.time_effects.to_string(),
                    String::new(),
                ],
                Err(e) => {
                    out.warn(CMD, format!("release {k} column ({})", c.column), e);
                    let mut cells: [String; 11] = std::array::from_fn(|_| na());
                    cells[3] = String::new();
                    cells[10] = e.to_string();
                    cells
                }
            };
            detail.row(head.into_iter().chain(rest));
        }
        for d in &table.datasets {
            diag.row([
                k.to_string(),
                d.kind.as_str().to_string(),
                d.n_obs.to_string(),
                d.missing_regressor.to_string(),
                d.broken_chains.to_string(),
            ]);
        }
    }
    out.push("persistence_detail.csv", &detail);
    out.push("persistence_diagnostics.csv", &diag);
    out
}
