//! Run configuration: a TOML file mirroring every command-line flag, with
//! flags taking precedence.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use judgebench_core::accuracy::Loss;
use judgebench_core::armodel::{ArLag, ArSpec, InfoCriterion};
use judgebench_core::descriptive::MomentConvention;
use judgebench_core::judgment::BaselineMethod;
use judgebench_core::linreg::CovarianceChoice;
use judgebench_core::panel::ParticipationThreshold;
use judgebench_core::syngen::SynthConfig;
use judgebench_core::{Quarter, QuarterRange};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// `auto` or a fixed non-negative integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "LagText", into = "LagText")]
pub enum LagSetting {
    Auto,
    Fixed(usize),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum LagText {
    Number(usize),
    Text(String),
}

impl TryFrom<LagText> for LagSetting {
    type Error = String;

    fn try_from(raw: LagText) -> std::result::Result<Self, String> {
        match raw {
            LagText::Number(n) => Ok(LagSetting::Fixed(n)),
            LagText::Text(t) => t.parse(),
        }
    }
}

impl From<LagSetting> for LagText {
    fn from(lag: LagSetting) -> Self {
        match lag {
            LagSetting::Auto => LagText::Text("auto".into()),
            LagSetting::Fixed(n) => LagText::Number(n),
        }
    }
}

impl FromStr for LagSetting {
    type Err = String;

    fn from_str(text: &str) -> std::result::Result<Self, String> {
        let t = text.trim();
        if t.eq_ignore_ascii_case("auto") {
            return Ok(LagSetting::Auto);
        }
        t.parse()
            .map(LagSetting::Fixed)
            .map_err(|_| format!("expected `auto` or a non-negative integer, got `{text}`"))
    }
}

impl fmt::Display for LagSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LagSetting::Auto => f.write_str("auto"),
            LagSetting::Fixed(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BaselineArg {
    Median,
    Mean,
}

impl From<BaselineArg> for BaselineMethod {
    fn from(b: BaselineArg) -> Self {
        match b {
            BaselineArg::Median => BaselineMethod::Median,
            BaselineArg::Mean => BaselineMethod::Mean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum LossArg {
    Squared,
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CovarianceArg {
    Hc1,
    Hac,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MomentsArg {
    Population,
    Adjusted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CriterionArg {
    Aic,
    Sic,
    Hq,
}

/// Parameters of `simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub forecasters: usize,
    pub quarters: usize,
    pub rho_own: f64,
    pub kappa: f64,
    pub judgment_sd: f64,
    pub p_neutral: f64,
    pub participation_min: f64,
    pub participation_max: f64,
}

impl Default for SimulateSection {
    fn default() -> Self {
        let d = SynthConfig::default();
        Self {
            forecasters: d.n_forecasters,
            quarters: d.n_quarters,
            rho_own: d.rho_own,
            kappa: d.kappa,
            judgment_sd: d.judgment_sd,
            p_neutral: d.p_neutral,
            participation_min: d.participation.0,
            participation_max: d.participation.1,
        }
    }
}

/// Parameters of `recovery`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecoverySection {
    pub replications: usize,
    pub rho_own: f64,
    pub forecasters: usize,
    pub quarters: usize,
}

impl Default for RecoverySection {
    fn default() -> Self {
        let d = SynthConfig::recovery(0.1);
        Self {
            replications: 100,
            rho_own: d.rho_own,
            forecasters: d.n_forecasters,
            quarters: d.n_quarters,
        }
    }
}

/// Everything a run depends on. Field order fixes the serialized form and
/// therefore the configuration hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub actuals: Option<PathBuf>,
    pub forecasts: Option<PathBuf>,
    pub spf: Option<PathBuf>,
    pub out: PathBuf,
    pub from: String,
    pub to: String,
    pub baseline: BaselineArg,
    /// Judgment against a baseline that excludes the forecaster's own forecast.
    pub leave_one_out: bool,
    pub grid: f64,
    pub thresholds: Vec<f64>,
    pub alpha: f64,
    pub loss: LossArg,
    pub hac_lag: LagSetting,
    pub individual_covariance: CovarianceArg,
    pub moments: MomentsArg,
    pub ar_lag: LagSetting,
    pub ar_max_lag: usize,
    pub ar_criterion: CriterionArg,
    pub ar_start: String,
    pub reselect_per_quarter: bool,
    pub seed: u64,
    pub simulate: SimulateSection,
    pub recovery: RecoverySection,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sample = QuarterRange::default_sample();
        Self {
            actuals: None,
            forecasts: None,
            spf: None,
            out: PathBuf::from("out"),
            from: sample.first.to_string(),
            to: sample.last.to_string(),
            baseline: BaselineArg::Median,
            leave_one_out: false,
            grid: 0.1,
            thresholds: vec![0.10, 0.25, 0.50],
            alpha: 0.05,
            loss: LossArg::Squared,
            hac_lag: LagSetting::Auto,
            individual_covariance: CovarianceArg::Hc1,
            moments: MomentsArg::Population,
            ar_lag: LagSetting::Fixed(1),
            ar_max_lag: judgebench_core::armodel::DEFAULT_MAX_LAG,
            ar_criterion: CriterionArg::Sic,
            ar_start: ArSpec::default().start.to_string(),
            reselect_per_quarter: false,
            seed: 42,
            simulate: SimulateSection::default(),
            recovery: RecoverySection::default(),
        }
    }
}

/// Validated, typed view of a [`RunConfig`].
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub sample: QuarterRange,
    pub baseline: BaselineMethod,
    pub leave_one_out: bool,
    pub grid: f64,
    pub thresholds: Vec<ParticipationThreshold>,
    pub alpha: f64,
    pub loss: Loss,
    pub aggregate_covariance: CovarianceChoice,
    pub individual_covariance: CovarianceChoice,
    pub moments: MomentConvention,
    pub ar: ArSpec,
    pub seed: u64,
}

fn parse_quarter(field: &str, text: &str) -> Result<Quarter> {
    text.parse()
        .map_err(|e| CliError::Config(format!("{field}: {e}")))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(CliError::MissingInput {
                role: "config",
                path: path.to_path_buf(),
            });
        }
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            line: e
                .span()
                .map_or(0, |s| text[..s.start].lines().count() as u64),
            message: e.message().replace('\n', " "),
        })
    }

    pub fn resolve(&self) -> Result<Settings> {
        let sample = QuarterRange::new(
            parse_quarter("from", &self.from)?,
            parse_quarter("to", &self.to)?,
        )
        .map_err(|e| CliError::Config(e.to_string()))?;
        if !(self.grid > 0.0 && self.grid.is_finite()) {
            return Err(CliError::Config(format!(
                "grid must be positive, got {}",
                self.grid
            )));
        }
        if self.thresholds.is_empty() {
            return Err(CliError::Config(
                "at least one participation threshold is required".into(),
            ));
        }
        if let Some(t) = self.thresholds.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
            return Err(CliError::Config(format!("threshold {t} is outside (0, 1]")));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(CliError::Config(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        let aggregate_covariance = match self.hac_lag {
            LagSetting::Auto => CovarianceChoice::HacAuto,
            LagSetting::Fixed(n) => CovarianceChoice::Hac(n),
        };
        let individual_covariance = match self.individual_covariance {
            CovarianceArg::Hc1 => CovarianceChoice::Hc1,
            CovarianceArg::Hac => aggregate_covariance,
        };
        let lag = match self.ar_lag {
            LagSetting::Auto => ArLag::Auto,
            LagSetting::Fixed(p) if p > self.ar_max_lag => {
                return Err(CliError::Config(format!(
                    "AR lag {p} exceeds the maximum lag {}",
                    self.ar_max_lag
                )))
            }
            LagSetting::Fixed(p) => ArLag::Fixed(p),
        };
        let ar = ArSpec {
            lag,
            max_lag: self.ar_max_lag,
            start: parse_quarter("ar_start", &self.ar_start)?,
            criterion: match self.ar_criterion {
                CriterionArg::Aic => InfoCriterion::Aic,
                CriterionArg::Sic => InfoCriterion::Sic,
                CriterionArg::Hq => InfoCriterion::Hq,
            },
            reselect_per_quarter: self.reselect_per_quarter,
        };
        Ok(Settings {
            sample,
            baseline: self.baseline.into(),
            leave_one_out: self.leave_one_out,
            grid: self.grid,
            thresholds: self
                .thresholds
                .iter()
                .map(|&t| ParticipationThreshold::standard(t))
                .collect(),
            alpha: self.alpha,
            loss: match self.loss {
                LossArg::Squared => Loss::Squared,
                LossArg::Absolute => Loss::Absolute,
            },
            aggregate_covariance,
            individual_covariance,
            moments: match self.moments {
                MomentsArg::Population => MomentConvention::Population,
                MomentsArg::Adjusted => MomentConvention::SampleAdjusted,
            },
            ar,
            seed: self.seed,
        })
    }

    pub fn synth_config(&self) -> Result<SynthConfig> {
        let s = &self.simulate;
        let cfg = SynthConfig {
            n_forecasters: s.forecasters,
            n_quarters: s.quarters,
            first_quarter: parse_quarter("from", &self.from)?,
            grid: self.grid,
            rho_own: s.rho_own,
            kappa: s.kappa,
            judgment_sd: s.judgment_sd,
            p_neutral: s.p_neutral,
            participation: (s.participation_min, s.participation_max),
            ..SynthConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn recovery_config(&self) -> Result<SynthConfig> {
        let r = &self.recovery;
        if r.replications == 0 {
            return Err(CliError::Config(
                "at least one replication is required".into(),
            ));
        }
        let cfg = SynthConfig {
            n_forecasters: r.forecasters,
            n_quarters: r.quarters,
            grid: self.grid,
            ..SynthConfig::recovery(r.rho_own)
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// The configuration without file locations, as echoed in manifests.
    pub fn semantic(&self) -> RunConfig {
        RunConfig {
            actuals: None,
            forecasts: None,
            spf: None,
            out: PathBuf::new(),
            ..self.clone()
        }
    }

    /// SHA-256 of the canonical JSON of [`RunConfig::semantic`]. Input
    /// contents are hashed separately in the manifest.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(&self.semantic()).expect("config serializes");
        hex(&Sha256::digest(json.as_bytes()))
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
