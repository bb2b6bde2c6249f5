//! Synthetic worlds with known judgment dynamics, used to check that the
//! estimators recover what was put in.
//!
//! The first release follows an AR(1); later releases add independent
//! revisions. Each quarter and release has a latent baseline, the release
//! value plus noise common to all forecasters. Forecaster `i` reports the
//! baseline plus its judgment, rounded to the reporting grid, in the
//! quarters it participates. Judgments evolve as
//!
//! ```text
//! j[t][k] = rho * j[t-1][k] + kappa * j[t][k-1] + eta
//! ```
//!
//! where the first release takes the third release of the previous quarter
//! as its cross term, and each value is replaced by zero with probability
//! `p_neutral` before it feeds the recursion.
//!
//! Random numbers come from independent ChaCha streams per purpose and per
//! forecaster, so adding forecasters leaves the actuals and the other
//! forecasters unchanged.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use libm::{fabs, sqrt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::armodel::{ar_forecast_values, ArLag, ArSpec};
use crate::judgment::{baseline, extract_judgments, round_to_grid, BaselineMethod};
use crate::panel::{ActualSeries, ForecastPanel, ForecastRecord, QuarterlySeries};
use crate::panelreg::{build_persistence_dataset, fe_estimate, FeSpec, RegressorKind};
use crate::quarter::{Quarter, ReleaseKind};
use crate::special::student_t_quantile;
use crate::{Error, Result};

const STREAM_ACTUALS: u64 = 1;
const STREAM_BASELINE: u64 = 2;
const STREAM_SPF: u64 = 3;
const STREAM_JUDGMENT: u64 = 1 << 32;
const STREAM_PARTICIPATION: u64 = 2 << 32;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn normal(rng: &mut ChaCha8Rng, sd: f64) -> f64 {
    if sd == 0.0 {
        return 0.0;
    }
    sd * rng.sample::<f64, _>(StandardNormal)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_forecasters: usize,
    pub n_quarters: usize,
    pub first_quarter: Quarter,
    /// Quarters of actual data generated before `first_quarter`, available
    /// to autoregressive forecasts.
    pub history_quarters: usize,
    pub ar_intercept: f64,
    pub ar_coefficient: f64,
    pub innovation_sd: f64,
    /// Revision noise from release 1 to 2 and from 2 to 3.
    pub revision_sd: [f64; 2],
    /// Noise of the latent baseline around the release value.
    pub baseline_sd: f64,
    /// Noise of the SPF nowcast around the first-release baseline.
    pub spf_sd: f64,
    pub rho_own: f64,
    pub kappa: f64,
    pub judgment_sd: f64,
    pub p_neutral: f64,
    /// Each forecaster's participation rate is uniform on this range.
    pub participation: (f64, f64),
    pub grid: f64,
    /// Judgment periods simulated and discarded before the sample.
    pub burn_in: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_forecasters: 60,
            n_quarters: 92,
            first_quarter: Quarter::new(2000, 1).expect("valid quarter"),
            history_quarters: 138,
            ar_intercept: 1.5,
            ar_coefficient: 0.3,
            innovation_sd: 2.0,
            revision_sd: [0.5, 0.3],
            baseline_sd: 1.0,
            spf_sd: 0.5,
            rho_own: 0.1,
            kappa: 0.1,
            judgment_sd: 0.2,
            p_neutral: 0.1,
            participation: (0.2, 0.9),
            grid: 0.1,
            burn_in: 50,
        }
    }
}

impl SynthConfig {
    /// The persistence-recovery design: 200 forecasters over 80 quarters,
    /// judgment standard deviation about 0.2, no cross-release carryover
    /// and nearly full participation.
    pub fn recovery(rho_own: f64) -> Self {
        Self {
            n_forecasters: 200,
            n_quarters: 80,
            rho_own,
            kappa: 0.0,
            judgment_sd: 0.2,
            p_neutral: 0.0,
            participation: (0.9, 1.0),
            history_quarters: 0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("synthetic config: {what}")));
        if self.n_forecasters == 0 || self.n_quarters == 0 {
            return bad("need at least one forecaster and one quarter");
        }
        if !(fabs(self.rho_own) < 1.0) {
            return bad("|rho_own| must be below 1");
        }
        if !self.ar_coefficient.is_finite()
            || !self.ar_intercept.is_finite()
            || !self.kappa.is_finite()
        {
            return bad("coefficients must be finite");
        }
        let sds = [
            self.innovation_sd,
            self.revision_sd[0],
            self.revision_sd[1],
            self.baseline_sd,
            self.spf_sd,
            self.judgment_sd,
            self.grid,
        ];
        if sds.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return bad("standard deviations and the grid must be finite and non-negative");
        }
        let (lo, hi) = self.participation;
        let unit = |p: f64| (0.0..=1.0).contains(&p);
        if !unit(self.p_neutral) || !unit(lo) || !unit(hi) || lo > hi {
            return bad("probabilities must lie in [0, 1] with a non-empty participation range");
        }
        Ok(())
    }

    pub fn sample_quarters(&self) -> impl Iterator<Item = Quarter> + '_ {
        (0..self.n_quarters as i64).map(|t| self.first_quarter.offset(t))
    }
}

/// Latent judgment of one forecaster for one quarter and release.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthRecord {
    pub economist_id: String,
    pub quarter: Quarter,
    pub release: ReleaseKind,
    pub baseline: f64,
    pub judgment: f64,
    pub participated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthWorld {
    /// Indexed by release.
    pub actuals: [ActualSeries; 3],
    pub panel: ForecastPanel,
    pub spf: QuarterlySeries,
    pub truth: Vec<TruthRecord>,
}

pub fn economist_name(i: usize) -> String {
    format!("E{i:03}")
}

fn firm_name(i: usize) -> String {
    format!("F{i:03}")
}

/// Generates the three release series over history plus sample.
fn simulate_actuals(config: &SynthConfig, seed: u64) -> [ActualSeries; 3] {
    let mut rng = stream(seed, STREAM_ACTUALS);
    let phi = config.ar_coefficient;
    let mut level = if fabs(phi) < 1.0 {
        config.ar_intercept / (1.0 - phi)
    } else {
        config.ar_intercept
    };
    for _ in 0..config.burn_in {
        level = config.ar_intercept + phi * level + normal(&mut rng, config.innovation_sd);
    }
    let first = config
        .first_quarter
        .offset(-(config.history_quarters as i64));
    let total = config.history_quarters + config.n_quarters;
    let mut values: [QuarterlySeries; 3] = Default::default();
    for t in 0..total {
        level = config.ar_intercept + phi * level + normal(&mut rng, config.innovation_sd);
        let y2 = level + normal(&mut rng, config.revision_sd[0]);
        let y3 = y2 + normal(&mut rng, config.revision_sd[1]);
        let q = first.offset(t as i64);
        for (k, y) in [level, y2, y3].into_iter().enumerate() {
            values[k].insert(q, round_to_grid(y, config.grid));
        }
    }
    let [a, b, c] = values;
    [
        ActualSeries::new(ReleaseKind::First, a),
        ActualSeries::new(ReleaseKind::Second, b),
        ActualSeries::new(ReleaseKind::Third, c),
    ]
}

/// Judgment paths `[quarter][release]` of one forecaster over the sample.
fn simulate_judgments(config: &SynthConfig, seed: u64, forecaster: usize) -> Vec<[f64; 3]> {
    let mut rng = stream(seed, STREAM_JUDGMENT + forecaster as u64);
    let mut out = Vec::with_capacity(config.n_quarters);
    let mut prev = [0.0; 3];
    for t in 0..config.burn_in + config.n_quarters {
        let mut cur = [0.0; 3];
        for k in 0..3 {
            let cross = if k == 0 { prev[2] } else { cur[k - 1] };
            let eta = normal(&mut rng, config.judgment_sd);
            let neutral = config.p_neutral > 0.0 && rng.random::<f64>() < config.p_neutral;
            cur[k] = if neutral {
                0.0
            } else {
                config.rho_own * prev[k] + config.kappa * cross + eta
            };
        }
        if t >= config.burn_in {
            out.push(cur);
        }
        prev = cur;
    }
    out
}

fn simulate_participation(config: &SynthConfig, seed: u64, forecaster: usize) -> Vec<bool> {
    let mut rng = stream(seed, STREAM_PARTICIPATION + forecaster as u64);
    let (lo, hi) = config.participation;
    let rate = lo + (hi - lo) * rng.random::<f64>();
    (0..config.n_quarters)
        .map(|_| rng.random::<f64>() < rate)
        .collect()
}

/// Deterministic in `(config, seed)`.
pub fn simulate_world(config: &SynthConfig, seed: u64) -> Result<SynthWorld> {
    config.validate()?;
    let actuals = simulate_actuals(config, seed);
    let quarters: Vec<Quarter> = config.sample_quarters().collect();

    let mut rng = stream(seed, STREAM_BASELINE);
    let baselines: Vec<[f64; 3]> = quarters
        .iter()
        .map(|q| {
            let mut b = [0.0; 3];
            for (k, slot) in b.iter_mut().enumerate() {
                *slot = actuals[k].values[q] + normal(&mut rng, config.baseline_sd);
            }
            b
        })
        .collect();

    let mut rng = stream(seed, STREAM_SPF);
    let spf: QuarterlySeries = quarters
        .iter()
        .zip(&baselines)
        .map(|(q, b)| (*q, b[0] + normal(&mut rng, config.spf_sd)))
        .collect();

    let mut records = Vec::new();
    let mut truth = Vec::with_capacity(config.n_forecasters * config.n_quarters * 3);
    for i in 0..config.n_forecasters {
        let judgments = simulate_judgments(config, seed, i);
        let present = simulate_participation(config, seed, i);
        let name = economist_name(i);
        let firm = firm_name(i);
        for (t, q) in quarters.iter().enumerate() {
            for k in ReleaseKind::ALL {
                let b = baselines[t][k.index()];
                let j = judgments[t][k.index()];
                if present[t] {
                    records.push(ForecastRecord {
                        economist_id: name.clone(),
                        firm_id: firm.clone(),
                        quarter: *q,
                        release: k,
                        value: round_to_grid(b + j, config.grid),
                        report_date: None,
                    });
                }
                truth.push(TruthRecord {
                    economist_id: name.clone(),
                    quarter: *q,
                    release: k,
                    baseline: b,
                    judgment: j,
                    participated: present[t],
                });
            }
        }
    }
    Ok(SynthWorld {
        actuals,
        panel: ForecastPanel::new(records)?,
        spf,
        truth,
    })
}

/// A world where the aggregate prediction is the conditional mean of the
/// actual given everything known at forecast time, so efficiency holds.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalConfig {
    pub n_quarters: usize,
    pub history_quarters: usize,
    pub first_quarter: Quarter,
    pub intercept: f64,
    pub coefficient: f64,
    /// Shock the forecaster observes before predicting.
    pub known_sd: f64,
    /// Shock nobody observes.
    pub unknown_sd: f64,
    /// Noise of the SPF nowcast, which sees half of the known shock.
    pub spf_sd: f64,
    pub grid: f64,
}

impl Default for RationalConfig {
    fn default() -> Self {
        Self {
            n_quarters: 92,
            history_quarters: 138,
            first_quarter: Quarter::new(2000, 1).expect("valid quarter"),
            intercept: 1.5,
            coefficient: 0.3,
            known_sd: 1.5,
            unknown_sd: 1.0,
            spf_sd: 0.5,
            grid: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RationalWorld {
    pub actual: QuarterlySeries,
    pub prediction: QuarterlySeries,
    pub spf: QuarterlySeries,
    pub ar_forecast: QuarterlySeries,
}

pub fn simulate_rational_world(config: &RationalConfig, seed: u64) -> Result<RationalWorld> {
    let mut rng = stream(seed, STREAM_ACTUALS);
    let (c, phi) = (config.intercept, config.coefficient);
    let first = config
        .first_quarter
        .offset(-(config.history_quarters as i64));
    let mut y_prev = if fabs(phi) < 1.0 { c / (1.0 - phi) } else { c };
    let mut actual = QuarterlySeries::new();
    let mut prediction = QuarterlySeries::new();
    let mut spf = QuarterlySeries::new();
    for t in 0..config.history_quarters + config.n_quarters {
        let q = first.offset(t as i64);
        let known = normal(&mut rng, config.known_sd);
        let unknown = normal(&mut rng, config.unknown_sd);
        let noise = normal(&mut rng, config.spf_sd);
        let mean = c + phi * y_prev;
        let y = mean + known + unknown;
        actual.insert(q, y);
        if t >= config.history_quarters {
            prediction.insert(q, round_to_grid(mean + known, config.grid));
            spf.insert(q, mean + 0.5 * known + noise);
        }
        y_prev = y;
    }
    let targets: Vec<Quarter> = prediction.keys().copied().collect();
    let spec = ArSpec {
        lag: ArLag::Fixed(1),
        start: first,
        ..ArSpec::default()
    };
    let ar_forecast = ar_forecast_values(&actual, &targets, &spec)?;
    actual.retain(|q, _| prediction.contains_key(q));
    Ok(RationalWorld {
        actual,
        prediction,
        spf,
        ar_forecast,
    })
}

/// Own-lag fixed-effects slope of one simulated world.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicationOutcome {
    pub beta: f64,
    pub se: f64,
    pub forecasters: usize,
    /// Whether the 95% interval `beta +- t(G-1) se` contains the true persistence.
    pub covered: bool,
}

/// One replication: simulate, extract judgments against the median
/// baseline and fit the own-lag fixed-effects regression for `release`.
pub fn recovery_replication(
    config: &SynthConfig,
    seed: u64,
    release: ReleaseKind,
) -> Result<ReplicationOutcome> {
    let world = simulate_world(config, seed)?;
    let base = baseline(&world.panel, release, BaselineMethod::Median);
    let jp = extract_judgments(&world.panel, &base, config.grid)?;
    let ds = build_persistence_dataset(&jp, release, RegressorKind::OwnLag);
    let fit = fe_estimate(&ds.observations, FeSpec::Fe)?;
    let critical = student_t_quantile(0.975, fit.n_forecasters as f64 - 1.0);
    Ok(ReplicationOutcome {
        beta: fit.beta,
        se: fit.se_clustered,
        forecasters: fit.n_forecasters,
        covered: fabs(fit.beta - config.rho_own) <= critical * fit.se_clustered,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoverySummary {
    pub target: f64,
    pub replications: usize,
    pub completed: usize,
    pub mean_beta: f64,
    pub sd_beta: f64,
    pub mean_se: f64,
    pub coverage: f64,
    /// First error message per failing replication index.
    pub failures: Vec<(usize, String)>,
}

/// Aggregates replication outcomes given in replication order.
pub fn summarize_recovery(target: f64, outcomes: &[Result<ReplicationOutcome>]) -> RecoverySummary {
    let ok: Vec<&ReplicationOutcome> = outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
    let failures = outcomes
        .iter()
        .enumerate()
        .filter_map(|(i, o)| o.as_ref().err().map(|e| (i, format!("{e}"))))
        .collect();
    let n = ok.len() as f64;
    let (mean_beta, sd_beta, mean_se, coverage) = if ok.is_empty() {
        (f64::NAN, f64::NAN, f64::NAN, f64::NAN)
    } else {
        let mean = ok.iter().map(|o| o.beta).sum::<f64>() / n;
        let var = if ok.len() > 1 {
            ok.iter()
                .map(|o| (o.beta - mean) * (o.beta - mean))
                .sum::<f64>()
                / (n - 1.0)
        } else {
            0.0
        };
        (
            mean,
            sqrt(var),
            ok.iter().map(|o| o.se).sum::<f64>() / n,
            ok.iter().filter(|o| o.covered).count() as f64 / n,
        )
    };
    RecoverySummary {
        target,
        replications: outcomes.len(),
        completed: ok.len(),
        mean_beta,
        sd_beta,
        mean_se,
        coverage,
        failures,
    }
}

/// Sequential recovery experiment with seeds `seed, seed + 1, ...`.
pub fn recovery_experiment(
    config: &SynthConfig,
    replications: usize,
    seed: u64,
) -> Result<RecoverySummary> {
    if replications == 0 {
        return Err(Error::Config("at least one replication is required".into()));
    }
    config.validate()?;
    let outcomes: Vec<_> = (0..replications as u64)
        .map(|r| recovery_replication(config, seed.wrapping_add(r), ReleaseKind::First))
        .collect();
    Ok(summarize_recovery(config.rho_own, &outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn small() -> SynthConfig {
        SynthConfig {
            n_forecasters: 8,
            n_quarters: 12,
            history_quarters: 4,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn degenerate_world_reproduces_actuals() {
        let cfg = SynthConfig {
            innovation_sd: 0.0,
            revision_sd: [0.0, 0.0],
            baseline_sd: 0.0,
            spf_sd: 0.0,
            judgment_sd: 0.0,
            rho_own: 0.0,
            kappa: 0.0,
            p_neutral: 1.0,
            participation: (1.0, 1.0),
            ..small()
        };
        let w = simulate_world(&cfg, 3).unwrap();
        for r in w.panel.records() {
            assert_eq!(Some(r.value), w.actuals[r.release.index()].get(r.quarter));
        }
        assert!(w.truth.iter().all(|t| t.judgment == 0.0));
        assert_eq!(w.panel.len(), 8 * 12 * 3);
    }

    #[test]
    fn worlds_are_deterministic() {
        assert_eq!(
            simulate_world(&small(), 11).unwrap(),
            simulate_world(&small(), 11).unwrap()
        );
        assert_ne!(
            simulate_world(&small(), 11).unwrap(),
            simulate_world(&small(), 12).unwrap()
        );
    }

    #[test]
    fn more_forecasters_leave_actuals_alone() {
        let a = simulate_world(&small(), 5).unwrap();
        let b = simulate_world(
            &SynthConfig {
                n_forecasters: 20,
                ..small()
            },
            5,
        )
        .unwrap();
        assert_eq!(a.actuals, b.actuals);
        assert_eq!(a.spf, b.spf);
        let e0 = |w: &SynthWorld| w.panel.series_of("E000", ReleaseKind::Second);
        assert_eq!(e0(&a), e0(&b));
    }

    #[test]
    fn forecasts_are_rounded_baseline_plus_judgment() {
        let w = simulate_world(&small(), 9).unwrap();
        for t in w.truth.iter().filter(|t| t.participated) {
            let r = w.panel.get(&t.economist_id, t.quarter, t.release).unwrap();
            assert_eq!(r.value, round_to_grid(t.baseline + t.judgment, 0.1));
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(SynthConfig {
            rho_own: 1.0,
            ..small()
        }
        .validate()
        .is_err());
        assert!(SynthConfig {
            p_neutral: 1.5,
            ..small()
        }
        .validate()
        .is_err());
        assert!(SynthConfig {
            judgment_sd: -0.1,
            ..small()
        }
        .validate()
        .is_err());
        assert!(SynthConfig {
            participation: (0.8, 0.2),
            ..small()
        }
        .validate()
        .is_err());
        assert!(recovery_experiment(&small(), 0, 1).is_err());
    }

    #[test]
    fn rational_world_is_aligned() {
        let w = simulate_rational_world(&RationalConfig::default(), 4).unwrap();
        assert_eq!(w.actual.len(), 92);
        assert_eq!(w.prediction.len(), 92);
        assert_eq!(w.ar_forecast.len(), 92);
        assert!(w.actual.keys().eq(w.spf.keys()));
    }

    #[test]
    fn summary_counts_failures() {
        let outcomes = vec![
            Ok(ReplicationOutcome {
                beta: 0.1,
                se: 0.01,
                forecasters: 5,
                covered: true,
            }),
            Err(Error::SingleEntity),
            Ok(ReplicationOutcome {
                beta: 0.3,
                se: 0.03,
                forecasters: 5,
                covered: false,
            }),
        ];
        let s = summarize_recovery(0.1, &outcomes);
        assert_eq!((s.replications, s.completed, s.failures.len()), (3, 2, 1));
        assert!((s.mean_beta - 0.2).abs() < 1e-15);
        assert_eq!(s.coverage, 0.5);
    }
}
