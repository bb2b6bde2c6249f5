//! Judgment persistence: regressions of a forecaster's judgment on its own
//! previous-quarter judgment or on the judgment for the preceding release,
//! estimated on unbalanced panels with forecaster-clustered standard errors.
//!
//! Three specifications are available. `Pooled` is OLS with an intercept.
//! `Fe` demeans response and regressor within each economist. `FeTe` adds
//! one indicator per quarter (all but the first), also demeaned within
//! economist, which is exact on unbalanced panels. Economists observed once
//! carry no within variation and are dropped from the fixed-effects fits.
//!
//! The fixed-effects estimator of a lagged dependent variable is biased
//! towards zero by roughly `(1 + rho) / (T - 1)` when each forecaster
//! contributes `T` periods. No correction is applied.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use libm::sqrt;

use crate::judgment::JudgmentPanel;
use crate::linalg::Matrix;
use crate::linreg::{cluster_covariance, ols};
use crate::quarter::{Quarter, ReleaseKind};
use crate::special::student_t_two_sided;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RegressorKind {
    /// Same release, previous calendar quarter.
    OwnLag,
    /// Same quarter, preceding release. For the first release this is the
    /// third release of the previous quarter.
    PriorRelease,
}

impl RegressorKind {
    pub const ALL: [RegressorKind; 2] = [RegressorKind::OwnLag, RegressorKind::PriorRelease];

    pub fn as_str(self) -> &'static str {
        match self {
            RegressorKind::OwnLag => "own_lag",
            RegressorKind::PriorRelease => "prior_release",
        }
    }

    /// Where the regressor for a response at `(quarter, release)` lives.
    pub fn source(self, quarter: Quarter, release: ReleaseKind) -> (Quarter, ReleaseKind) {
        match self {
            RegressorKind::OwnLag => (quarter.pred(), release),
            RegressorKind::PriorRelease => match release.prior() {
                Some(prior) => (quarter, prior),
                None => (quarter.pred(), ReleaseKind::Third),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PanelObservation {
    pub economist_id: String,
    pub quarter: Quarter,
    pub response: f64,
    pub regressor: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceDataset {
    pub release: ReleaseKind,
    pub kind: RegressorKind,
    pub observations: Vec<PanelObservation>,
    /// Responses without a regressor.
    pub missing_regressor: usize,
    /// The subset of `missing_regressor` where the economist had judged
    /// this release in some earlier quarter but not the previous one.
    pub broken_chains: usize,
}

/// Pairs every judgment of `release` with its regressor, ordered by
/// economist and quarter. Lags never skip over a missing quarter.
pub fn build_persistence_dataset(
    jp: &JudgmentPanel,
    release: ReleaseKind,
    kind: RegressorKind,
) -> PersistenceDataset {
    let mut observations = Vec::new();
    let mut missing_regressor = 0;
    let mut broken_chains = 0;
    let mut key = (String::new(), Quarter::from_ordinal(0), release);
    for (economist, series) in jp.by_economist(release) {
        key.0.clear();
        key.0.push_str(economist);
        for (i, (quarter, judgment)) in series.iter().enumerate() {
            let (q, k) = kind.source(*quarter, release);
            key.1 = q;
            key.2 = k;
            match jp.entries.get(&key) {
                Some(x) => observations.push(PanelObservation {
                    economist_id: String::from(economist),
                    quarter: *quarter,
                    response: judgment.value,
                    regressor: x.value,
                }),
                None => {
                    missing_regressor += 1;
                    if kind == RegressorKind::OwnLag && i > 0 {
                        broken_chains += 1;
                    }
                }
            }
        }
    }
    PersistenceDataset {
        release,
        kind,
        observations,
        missing_regressor,
        broken_chains,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FeSpec {
    Pooled,
    Fe,
    FeTe,
}

impl FeSpec {
    pub const ALL: [FeSpec; 3] = [FeSpec::Pooled, FeSpec::Fe, FeSpec::FeTe];

    pub fn as_str(self) -> &'static str {
        match self {
            FeSpec::Pooled => "pooled",
            FeSpec::Fe => "FE",
            FeSpec::FeTe => "FE+TE",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PanelFitResult {
    pub spec: FeSpec,
    pub beta: f64,
    pub se_clustered: f64,
    /// Two-sided, from Student-t with `G - 1` degrees of freedom.
    pub p_value: f64,
    pub n_obs: usize,
    pub n_forecasters: usize,
    /// Within R-squared for the fixed-effects specifications.
    pub r_squared: f64,
    /// Squared correlation of the untransformed response with the linear
    /// prediction built from the slope and time effects.
    pub r_squared_overall: f64,
    pub dropped_singletons: usize,
    /// Quarter indicators kept in the `FeTe` design.
    pub time_effects: usize,
}

impl PanelFitResult {
    pub fn stars(&self) -> &'static str {
        stars(self.p_value)
    }
}

/// `***`, `**` and `*` at the 1, 5 and 10 percent levels.
pub fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.10 {
        "*"
    } else {
        ""
    }
}

fn squared_correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa > 0.0 && sbb > 0.0 {
        sab * sab / (saa * sbb)
    } else {
        0.0
    }
}

/// Greedy selection of linearly independent columns from a Gram matrix,
/// visiting them in `order`. Returns the indices kept, in visiting order.
fn independent_columns(gram: &Matrix, order: &[usize], tolerance: f64) -> Vec<usize> {
    // rows of the Cholesky factor for the kept columns
    let mut factor: Vec<Vec<f64>> = Vec::new();
    let mut kept = Vec::new();
    for &j in order {
        let diag = gram[(j, j)];
        if diag <= 0.0 {
            continue;
        }
        let mut l = vec![0.0; kept.len()];
        for (r, &c) in kept.iter().enumerate() {
            let mut v = gram[(c, j)];
            for s in 0..r {
                v -= factor[r][s] * l[s];
            }
            l[r] = v / factor[r][r];
        }
        let residual = diag - l.iter().map(|v| v * v).sum::<f64>();
        if residual > tolerance * diag {
            l.push(sqrt(residual));
            factor.push(l);
            kept.push(j);
        }
    }
    kept
}

/// Fits one specification to a dataset.
pub fn fe_estimate(data: &[PanelObservation], spec: FeSpec) -> Result<PanelFitResult> {
    if data.is_empty() {
        return Err(Error::Empty("persistence dataset"));
    }
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, o) in data.iter().enumerate() {
        groups.entry(o.economist_id.as_str()).or_default().push(i);
    }
    if spec == FeSpec::Pooled {
        return pooled(data, groups.len());
    }

    let dropped_singletons = groups.values().filter(|g| g.len() < 2).count();
    groups.retain(|_, g| g.len() >= 2);
    if groups.len() < 2 {
        return Err(Error::SingleEntity);
    }
    let rows: Vec<usize> = groups.values().flatten().copied().collect();
    let n = rows.len();
    let mut y = vec![0.0; n];
    let mut x_raw = vec![0.0; n];
    let mut clusters = Vec::with_capacity(n);
    let mut members: Vec<(usize, usize)> = Vec::with_capacity(groups.len());
    let mut pos = 0;
    for (e, g) in &groups {
        members.push((pos, g.len()));
        for &i in g {
            y[pos] = data[i].response;
            x_raw[pos] = data[i].regressor;
            clusters.push(*e);
            pos += 1;
        }
    }
    let demean = |v: &[f64]| -> Vec<f64> {
        let mut out = v.to_vec();
        for &(start, len) in &members {
            let block = &mut out[start..start + len];
            let m = block.iter().sum::<f64>() / len as f64;
            block.iter_mut().for_each(|b| *b -= m);
        }
        out
    };
    let y_within = demean(&y);
    let x_within = demean(&x_raw);

    let mut columns = vec![x_within];
    let mut raw_columns = vec![x_raw];
    if spec == FeSpec::FeTe {
        let quarters: BTreeMap<Quarter, usize> = rows
            .iter()
            .map(|&i| data[i].quarter)
            .collect::<alloc::collections::BTreeSet<_>>()
            .into_iter()
            .enumerate()
            .map(|(j, q)| (q, j))
            .collect();
        let mut dummies = vec![vec![0.0; n]; quarters.len().saturating_sub(1)];
        for (p, &i) in rows.iter().enumerate() {
            let j = quarters[&data[i].quarter];
            if j > 0 {
                dummies[j - 1][p] = 1.0;
            }
        }
        for d in dummies {
            columns.push(demean(&d));
            raw_columns.push(d);
        }
    }

    let k_all = columns.len();
    let mut gram = Matrix::zeros(k_all, k_all);
    for a in 0..k_all {
        for b in a..k_all {
            let v: f64 = columns[a].iter().zip(&columns[b]).map(|(p, q)| p * q).sum();
            gram[(a, b)] = v;
            gram[(b, a)] = v;
        }
    }
    // Time effects first: a regressor spanned by them has no identified slope.
    let order: Vec<usize> = (1..k_all).chain([0]).collect();
    let mut kept = independent_columns(&gram, &order, 1e-10);
    if kept.pop() != Some(0) {
        return Err(Error::ZeroVariance("regressor"));
    }
    kept.insert(0, 0);
    let design_columns: Vec<Vec<f64>> = kept.iter().map(|&c| columns[c].clone()).collect();
    let design = Matrix::from_columns(&design_columns)?;
    let k = design.cols();
    if n <= k {
        return Err(Error::InsufficientObservations {
            required: k + 1,
            available: n,
        });
    }
    let fit = ols(&design, &y_within)?;
    let cov = cluster_covariance(&fit, &design, &clusters, k)?;
    let beta = fit.coefficients[0];
    let se = cov.std_error(0);

    let mut prediction = vec![0.0; n];
    for (coef, &c) in fit.coefficients.iter().zip(&kept) {
        for (p, v) in prediction.iter_mut().zip(&raw_columns[c]) {
            *p += coef * v;
        }
    }
    let g = groups.len();
    Ok(PanelFitResult {
        spec,
        beta,
        se_clustered: se,
        p_value: t_p_value(beta, se, g),
        n_obs: n,
        n_forecasters: g,
        r_squared: fit.r_squared,
        r_squared_overall: squared_correlation(&prediction, &y),
        dropped_singletons,
        time_effects: k - 1,
    })
}

fn t_p_value(beta: f64, se: f64, clusters: usize) -> f64 {
    if se > 0.0 {
        student_t_two_sided(beta / se, clusters as f64 - 1.0)
    } else if beta == 0.0 {
        1.0
    } else {
        0.0
    }
}

fn pooled(data: &[PanelObservation], n_forecasters: usize) -> Result<PanelFitResult> {
    let n = data.len();
    let y: Vec<f64> = data.iter().map(|o| o.response).collect();
    let x: Vec<f64> = data.iter().map(|o| o.regressor).collect();
    let design = Matrix::from_columns(&[vec![1.0; n], x])?;
    let fit = ols(&design, &y).map_err(|e| match e {
        Error::RankDeficient { column: 1 } => Error::ZeroVariance("regressor"),
        other => other,
    })?;
    let clusters: Vec<&str> = data.iter().map(|o| o.economist_id.as_str()).collect();
    let cov = cluster_covariance(&fit, &design, &clusters, 2)?;
    let beta = fit.coefficients[1];
    let se = cov.std_error(1);
    Ok(PanelFitResult {
        spec: FeSpec::Pooled,
        beta,
        se_clustered: se,
        p_value: t_p_value(beta, se, n_forecasters),
        n_obs: n,
        n_forecasters,
        r_squared: fit.r_squared,
        r_squared_overall: fit.r_squared,
        dropped_singletons: 0,
        time_effects: 0,
    })
}

/// Clustered standard error of the slope for a dataset and specification.
pub fn cluster_se(data: &[PanelObservation], spec: FeSpec) -> Result<f64> {
    fe_estimate(data, spec).map(|r| r.se_clustered)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceCell {
    /// One-based column position: own-lag pooled, FE, FE+TE, then the
    /// same three for the prior-release regressor.
    pub column: usize,
    pub kind: RegressorKind,
    pub spec: FeSpec,
    pub result: Result<PanelFitResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceTable {
    pub release: ReleaseKind,
    pub cells: Vec<PersistenceCell>,
    pub datasets: Vec<PersistenceDatasetSummary>,
}

/// Dataset counts without the observations themselves.
#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceDatasetSummary {
    pub kind: RegressorKind,
    pub n_obs: usize,
    pub missing_regressor: usize,
    pub broken_chains: usize,
}

/// The six-column battery for each release. Failing cells carry their error.
pub fn persistence_battery(jp: &JudgmentPanel) -> Vec<PersistenceTable> {
    ReleaseKind::ALL
        .iter()
        .map(|&release| {
            let mut cells = Vec::new();
            let mut datasets = Vec::new();
            for kind in RegressorKind::ALL {
                let ds = build_persistence_dataset(jp, release, kind);
                for spec in FeSpec::ALL {
                    cells.push(PersistenceCell {
                        column: cells.len() + 1,
                        kind,
                        spec,
                        result: fe_estimate(&ds.observations, spec),
                    });
                }
                datasets.push(PersistenceDatasetSummary {
                    kind,
                    n_obs: ds.observations.len(),
                    missing_regressor: ds.missing_regressor,
                    broken_chains: ds.broken_chains,
                });
            }
            PersistenceTable {
                release,
                cells,
                datasets,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::judgment::Judgment;
    use alloc::format;

    fn q(t: i64) -> Quarter {
        Quarter::from_ordinal(8000 + t)
    }

    fn obs(e: &str, t: i64, y: f64, x: f64) -> PanelObservation {
        PanelObservation {
            economist_id: e.into(),
            quarter: q(t),
            response: y,
            regressor: x,
        }
    }

    fn panel(entries: &[(&str, i64, ReleaseKind, f64)]) -> JudgmentPanel {
        JudgmentPanel {
            grid: 0.1,
            entries: entries
                .iter()
                .map(|&(e, t, k, v)| {
                    (
                        (String::from(e), q(t), k),
                        Judgment {
                            value: v,
                            neutral: v == 0.0,
                        },
                    )
                })
                .collect(),
        }
    }

    #[test]
    fn own_lag_needs_the_previous_quarter() {
        use ReleaseKind::First;
        let jp = panel(&[
            ("a", 0, First, 0.1),
            ("a", 1, First, 0.2),
            ("a", 3, First, 0.3),
        ]);
        let ds = build_persistence_dataset(&jp, First, RegressorKind::OwnLag);
        assert_eq!(ds.observations, vec![obs("a", 1, 0.2, 0.1)]);
        assert_eq!((ds.missing_regressor, ds.broken_chains), (2, 1));
    }

    #[test]
    fn prior_release_pairs() {
        use ReleaseKind::*;
        let jp = panel(&[
            ("a", 0, First, 0.1),
            ("a", 0, Second, 0.2),
            ("a", 1, Second, 0.3),
            ("a", 0, Third, 0.4),
            ("a", 1, First, 0.5),
        ]);
        let second = build_persistence_dataset(&jp, Second, RegressorKind::PriorRelease);
        assert_eq!(
            second.observations,
            vec![obs("a", 0, 0.2, 0.1), obs("a", 1, 0.3, 0.5)]
        );
        let first = build_persistence_dataset(&jp, First, RegressorKind::PriorRelease);
        assert_eq!(first.observations, vec![obs("a", 1, 0.5, 0.4)]);
    }

    #[test]
    fn fe_recovers_an_exact_slope() {
        let data = vec![
            obs("a", 0, 0.5 * 1.0 + 3.0, 1.0),
            obs("a", 1, 0.5 * 2.0 + 3.0, 2.0),
            obs("b", 0, 0.5 * 5.0 - 1.0, 5.0),
            obs("b", 1, 0.5 * 4.0 - 1.0, 4.0),
        ];
        let r = fe_estimate(&data, FeSpec::Fe).unwrap();
        assert!((r.beta - 0.5).abs() < 1e-14);
        assert!(r.se_clustered.abs() < 1e-12);
        assert_eq!((r.n_obs, r.n_forecasters), (4, 2));
    }

    #[test]
    fn singletons_and_single_entities() {
        let data = vec![
            obs("a", 0, 1.0, 1.0),
            obs("a", 1, 2.0, 3.0),
            obs("a", 2, 2.5, 2.0),
            obs("b", 0, 1.0, 1.0),
        ];
        assert_eq!(fe_estimate(&data, FeSpec::Fe), Err(Error::SingleEntity));
        assert!(fe_estimate(&data, FeSpec::Pooled).is_ok());
    }

    #[test]
    fn all_zero_judgments_fail_every_cell() {
        use ReleaseKind::*;
        let mut entries = Vec::new();
        let names = ["a", "b", "c"];
        for e in names {
            for t in 0..6 {
                for k in ReleaseKind::ALL {
                    entries.push((e, t, k, 0.0));
                }
            }
        }
        let jp = panel(&entries);
        let tables = persistence_battery(&jp);
        assert_eq!(tables.len(), 3);
        for t in &tables {
            assert_eq!(t.cells.len(), 6);
            assert!(
                t.cells.iter().all(|c| c.result.is_err()),
                "{}",
                format!("{:?}", t.cells)
            );
        }
        assert_eq!(tables[0].release, First);
        assert_eq!(tables[2].cells[1].column, 2);
        assert_eq!(tables[2].cells[1].spec, FeSpec::Fe);
        assert_eq!(tables[2].cells[4].kind, RegressorKind::PriorRelease);
        assert_eq!(tables[1].datasets[0].n_obs, 15);
        let _ = Second;
    }

    #[test]
    fn time_effects_absorb_quarter_shifts() {
        let mut data = Vec::new();
        let mut s = 7u64;
        for e in 0..5 {
            for t in 0..6 {
                if (e + t) % 4 == 3 {
                    continue;
                }
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
                let noise = (s >> 40) as f64 / (1u64 << 24) as f64 - 0.5;
                let x = (e * 7 + t * 3) as f64 % 5.0;
                data.push(obs(&format!("e{e}"), t as i64, 0.3 * x + noise, x));
            }
        }
        let base = fe_estimate(&data, FeSpec::FeTe).unwrap();
        for o in &mut data {
            o.response += 10.0 * o.quarter.ordinal() as f64;
        }
        let shifted = fe_estimate(&data, FeSpec::FeTe).unwrap();
        assert!((base.beta - shifted.beta).abs() < 1e-9);
        assert!(base.time_effects > 0);
    }

    #[test]
    fn regressor_spanned_by_time_effects_is_unidentified() {
        let data = vec![
            obs("a", 0, 0.0, 0.0),
            obs("a", 1, 0.0, 0.0),
            obs("b", 1, 0.0, 0.0),
            obs("b", 2, 1.0, 2.7),
        ];
        assert_eq!(
            fe_estimate(&data, FeSpec::FeTe),
            Err(Error::ZeroVariance("regressor"))
        );
        assert!(fe_estimate(&data, FeSpec::Fe).is_ok());
    }

    #[test]
    fn star_levels() {
        assert_eq!(stars(0.001), "***");
        assert_eq!(stars(0.01), "**");
        assert_eq!(stars(0.07), "*");
        assert_eq!(stars(0.5), "");
    }
}
