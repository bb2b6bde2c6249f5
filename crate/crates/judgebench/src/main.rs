use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use judgebench::config::{BaselineArg, LagSetting, LossArg};
use judgebench::{run, Command, Result, RunConfig};

/// Evaluate judgment in panels of macroeconomic backcasts.
///
/// Settings come from `--config` (TOML, same keys as the long flags with
/// underscores) and are overridden by flags. Analysis commands write their
/// CSV tables and a diagnostics.csv into `--out`; `report` runs all of them
/// and adds manifest.json.
#[derive(Debug, Parser)]
#[command(name = "judgebench", version)]
struct Cli {
    /// What to run.
    #[arg(value_enum)]
    command: Command,

    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Actual values CSV (`quarter,release,value`).
    #[arg(long)]
    actuals: Option<PathBuf>,
    /// Forecast panel CSV (`quarter,release,economist_id,firm_id,value,report_date`).
    #[arg(long)]
    forecasts: Option<PathBuf>,
    /// SPF nowcasts CSV (`quarter,median,mean`).
    #[arg(long)]
    spf: Option<PathBuf>,
    /// First sample quarter, e.g. 2000Q1.
    #[arg(long)]
    from: Option<String>,
    /// Last sample quarter, e.g. 2022Q4.
    #[arg(long)]
    to: Option<String>,
    #[arg(long, value_enum)]
    baseline: Option<BaselineArg>,
    /// Measure judgment against a baseline that leaves out the forecaster's own forecast.
    #[arg(long)]
    leave_one_out: bool,
    /// Loss used in the accuracy comparison.
    #[arg(long, value_enum)]
    loss: Option<LossArg>,
    /// Reporting grid used for neutrality and rounding.
    #[arg(long)]
    grid: Option<f64>,
    /// Participation thresholds; the smallest is strict (more than), the others inclusive.
    #[arg(long, value_delimiter = ',')]
    thresholds: Option<Vec<f64>>,
    #[arg(long)]
    alpha: Option<f64>,
    /// HAC truncation lag: `auto` or a fixed number.
    #[arg(long)]
    hac_lag: Option<LagSetting>,
    /// AR order: a fixed number or `auto` for information-criterion selection.
    #[arg(long)]
    ar_lag: Option<LagSetting>,
    /// Reselect the AR order for every target quarter.
    #[arg(long)]
    reselect_per_quarter: bool,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,

    /// Simulated forecasters (simulate, recovery).
    #[arg(long)]
    forecasters: Option<usize>,
    /// Simulated sample quarters (simulate, recovery).
    #[arg(long)]
    quarters: Option<usize>,
    /// Own-lag judgment persistence (simulate, recovery).
    #[arg(long)]
    rho: Option<f64>,
    /// Cross-release judgment loading (simulate).
    #[arg(long)]
    kappa: Option<f64>,
    /// Number of recovery replications.
    #[arg(long)]
    replications: Option<usize>,
}

impl Cli {
    fn config(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($flag:ident => $($field:ident).+),* $(,)?) => {
                $(if let Some(v) = &self.$flag { c.$($field).+ = v.clone().into(); })*
            };
        }
        set!(
            actuals => actuals,
            forecasts => forecasts,
            spf => spf,
            from => from,
            to => to,
            baseline => baseline,
            grid => grid,
            thresholds => thresholds,
            alpha => alpha,
            loss => loss,
            hac_lag => hac_lag,
            ar_lag => ar_lag,
            out => out,
            seed => seed,
            replications => recovery.replications,
            kappa => simulate.kappa,
        );
        if self.leave_one_out {
            c.leave_one_out = true;
        }
        if self.reselect_per_quarter {
            c.reselect_per_quarter = true;
        }
        if let Some(n) = self.forecasters {
            c.simulate.forecasters = n;
            c.recovery.forecasters = n;
        }
        if let Some(t) = self.quarters {
            c.simulate.quarters = t;
            c.recovery.quarters = t;
        }
        if let Some(rho) = self.rho {
            c.simulate.rho_own = rho;
            c.recovery.rho_own = rho;
        }
        Ok(c)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.config().and_then(|c| run(cli.command, &c)) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.machine_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
