//! Command dispatch: load inputs, run analyses, write artifacts.

use std::path::{Path, PathBuf};

use judgebench_core::panel::clean_panel;
use judgebench_core::syngen::{
    recovery_replication, simulate_world, summarize_recovery, ReplicationOutcome,
};
use judgebench_core::{ActualSeries, ReleaseKind};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::analysis::{self, diagnostics_table, Dataset, Outcome};
use crate::config::{hex, RunConfig, Settings};
use crate::error::{CliError, Result};
use crate::io::{self, SpfNowcasts};
use crate::output::{fmt_f64, write_artifacts, Artifact, CsvTable};

/// Environment variable capping the number of worker threads.
pub const THREADS_VAR: &str = "JUDGEBENCH_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Describe,
    Judgment,
    Efficiency,
    Accuracy,
    Persistence,
    ArForecast,
    Simulate,
    Recovery,
    Report,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Describe => "describe",
            Command::Judgment => "judgment",
            Command::Efficiency => "efficiency",
            Command::Accuracy => "accuracy",
            Command::Persistence => "persistence",
            Command::ArForecast => "ar-forecast",
            Command::Simulate => "simulate",
            Command::Recovery => "recovery",
            Command::Report => "report",
        }
    }

    /// The analysis commands `report` runs, in output order.
    pub const REPORT_PARTS: [Command; 6] = [
        Command::Describe,
        Command::Judgment,
        Command::Efficiency,
        Command::Accuracy,
        Command::Persistence,
        Command::ArForecast,
    ];
}

struct Loaded {
    settings: Settings,
    panel: judgebench_core::ForecastPanel,
    cleaning: judgebench_core::panel::CleaningLog,
    actuals: Option<[ActualSeries; 3]>,
    spf: Option<SpfNowcasts>,
    inputs: Vec<(&'static str, PathBuf)>,
}

impl Loaded {
    fn dataset(&self) -> Dataset<'_> {
        Dataset {
            settings: &self.settings,
            panel: &self.panel,
            cleaning: &self.cleaning,
            actuals: self.actuals.as_ref(),
            spf: self.spf.as_ref(),
        }
    }
}

#[derive(Clone, Copy)]
enum Need {
    Required,
    Optional,
    Unused,
}

fn load_optional<T>(
    path: Option<&PathBuf>,
    role: &'static str,
    need: Need,
    read: impl FnOnce(&Path) -> Result<T>,
    inputs: &mut Vec<(&'static str, PathBuf)>,
) -> Result<Option<T>> {
    match (need, path) {
        (Need::Unused, _) | (Need::Optional, None) => Ok(None),
        _ => {
            let p = io::require(path, role)?;
            let value = read(p)?;
            inputs.push((role, p.to_path_buf()));
            Ok(Some(value))
        }
    }
}

fn load(command: Command, config: &RunConfig, settings: Settings) -> Result<Loaded> {
    use Need::*;
    let (forecasts, actuals, spf) = match command {
        Command::Describe | Command::Accuracy => (Required, Required, Unused),
        Command::Judgment => (Required, Optional, Unused),
        Command::Efficiency | Command::Report => (Required, Required, Optional),
        Command::Persistence => (Required, Unused, Unused),
        Command::ArForecast => (Unused, Required, Unused),
        Command::Simulate | Command::Recovery => (Unused, Unused, Unused),
    };
    let mut inputs = Vec::new();
    let raw = load_optional(
        config.forecasts.as_ref(),
        "forecasts",
        forecasts,
        io::read_forecasts,
        &mut inputs,
    )?;
    let actuals = load_optional(
        config.actuals.as_ref(),
        "actuals",
        actuals,
        io::read_actuals,
        &mut inputs,
    )?;
    let spf = load_optional(config.spf.as_ref(), "spf", spf, io::read_spf, &mut inputs)?;
    let (panel, cleaning) = match raw {
        Some(raw) => {
            let (clean, log) = clean_panel(&raw);
            (clean.restrict(&settings.sample), log)
        }
        None => Default::default(),
    };
    Ok(Loaded {
        settings,
        panel,
        cleaning,
        actuals,
        spf,
        inputs,
    })
}

fn analyse(command: Command, data: &Dataset<'_>) -> Outcome {
    match command {
        Command::Describe => analysis::describe(data),
        Command::Judgment => analysis::judgment(data),
        Command::Efficiency => analysis::efficiency(data),
        Command::Accuracy => analysis::accuracy(data),
        Command::Persistence => analysis::persistence(data),
        Command::ArForecast => analysis::ar_forecast_command(data),
        Command::Simulate | Command::Recovery | Command::Report => {
            unreachable!("not a single analysis")
        }
    }
}

#[derive(Serialize)]
struct FileEntry {
    #[serde(skip_serializing_if = "Option::is_none")]
    role: Option<&'static str>,
    path: String,
    bytes: u64,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest {
    artifact: &'static str,
    version: &'static str,
    command: &'static str,
    config_hash: String,
    config: RunConfig,
    inputs: Vec<FileEntry>,
    outputs: Vec<FileEntry>,
    diagnostics: usize,
}

fn digest(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

fn manifest(
    command: Command,
    config: &RunConfig,
    inputs: &[(&'static str, PathBuf)],
    outputs: &[Artifact],
    diagnostics: usize,
) -> Result<Artifact> {
    let inputs = inputs
        .iter()
        .map(|(role, path)| {
            let bytes = std::fs::read(path).map_err(|source| CliError::Read {
                path: path.clone(),
                source,
            })?;
            Ok(FileEntry {
                role: Some(role),
                path: path.display().to_string(),
                bytes: bytes.len() as u64,
                sha256: digest(&bytes),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let outputs = outputs
        .iter()
        .map(|a| FileEntry {
            role: None,
            path: a.name.clone(),
            bytes: a.contents.len() as u64,
            sha256: digest(a.contents.as_bytes()),
        })
        .collect();
    let m = Manifest {
        artifact: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: command.as_str(),
        config_hash: config.hash(),
        config: config.semantic(),
        inputs,
        outputs,
        diagnostics,
    };
    let mut text = serde_json::to_string_pretty(&m).expect("manifest serializes");
    text.push('\n');
    Ok(Artifact::new("manifest.json", text))
}

/// Artifacts of a command, in write order, without touching the output directory.
pub fn produce(command: Command, config: &RunConfig) -> Result<Vec<Artifact>> {
    let settings = config.resolve()?;
    match command {
        Command::Simulate => return simulate(config),
        Command::Recovery => return recovery(config),
        _ => {}
    }
    let loaded = load(command, config, settings)?;
    let data = loaded.dataset();
    let parts: &[Command] = if command == Command::Report {
        &Command::REPORT_PARTS
    } else {
        std::slice::from_ref(&command)
    };
    let mut outcome = Outcome::default();
    for &part in parts {
        outcome.absorb(analyse(part, &data));
    }
    let mut artifacts = outcome.artifacts;
    artifacts.push(Artifact::table(
        "diagnostics.csv",
        &diagnostics_table(&outcome.diagnostics),
    ));
    if command == Command::Report {
        let m = manifest(
            command,
            config,
            &loaded.inputs,
            &artifacts,
            outcome.diagnostics.len(),
        )?;
        artifacts.push(m);
    }
    Ok(artifacts)
}

/// Runs a command and writes its artifacts into the configured output directory.
pub fn run(command: Command, config: &RunConfig) -> Result<Vec<PathBuf>> {
    let artifacts = produce(command, config)?;
    write_artifacts(&config.out, &artifacts)
}

fn simulate(config: &RunConfig) -> Result<Vec<Artifact>> {
    let world = simulate_world(&config.synth_config()?, config.seed)?;
    Ok(io::world_tables(&world)
        .into_iter()
        .map(|(name, table)| Artifact::table(name, &table))
        .collect())
}

/// Worker count from [`THREADS_VAR`], if set to a positive integer.
pub fn thread_cap() -> Result<Option<usize>> {
    match std::env::var(THREADS_VAR) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Config(format!(
                "{THREADS_VAR} must be a positive integer, got `{v}`"
            ))),
        },
    }
}

fn recovery(config: &RunConfig) -> Result<Vec<Artifact>> {
    let synth = config.recovery_config()?;
    let replications = config.recovery.replications as u64;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap()? {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker threads: {e}")))?;
    let outcomes: Vec<judgebench_core::Result<ReplicationOutcome>> = pool.install(|| {
        (0..replications)
            .into_par_iter()
            .map(|r| recovery_replication(&synth, config.seed.wrapping_add(r), ReleaseKind::First))
            .collect()
    });
    let summary = summarize_recovery(synth.rho_own, &outcomes);

    let mut sum = CsvTable::new(
        Some("Persistence recovery: own-lag FE slope on the first release against the true persistence"),
        &[
            "target",
            "forecasters",
            "quarters",
            "replications",
            "completed",
            "mean_beta",
            "sd_beta",
            "mean_se",
            "coverage",
        ],
    );
    sum.row([
        fmt_f64(summary.target),
        synth.n_forecasters.to_string(),
        synth.n_quarters.to_string(),
        summary.replications.to_string(),
        summary.completed.to_string(),
        fmt_f64(summary.mean_beta),
        fmt_f64(summary.sd_beta),
        fmt_f64(summary.mean_se),
        fmt_f64(summary.coverage),
    ]);
    let mut reps = CsvTable::new(
        None,
        &[
            "replication",
            "seed",
            "beta",
            "se",
            "forecasters",
            "covered",
            "error",
        ],
    );
    for (r, o) in outcomes.iter().enumerate() {
        let seed = config.seed.wrapping_add(r as u64).to_string();
        match o {
            Ok(o) => reps.row([
                r.to_string(),
                seed,
                fmt_f64(o.beta),
                fmt_f64(o.se),
                o.forecasters.to_string(),
                u8::from(o.covered).to_string(),
                String::new(),
            ]),
            Err(e) => reps.row([
                r.to_string(),
                seed,
                "NA".into(),
                "NA".into(),
                "NA".into(),
                "NA".into(),
                e.to_string(),
            ]),
        }
    }
    Ok(vec![
        Artifact::table("recovery_summary.csv", &sum),
        Artifact::table("recovery_replications.csv", &reps),
    ])
}
