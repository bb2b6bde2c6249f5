//! Input readers and simulation writers for the three CSV schemas.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs::File;
use std::path::{Path, PathBuf};

use judgebench_core::judgment::BaselineMethod;
use judgebench_core::syngen::{SynthWorld, TruthRecord};
use judgebench_core::{ActualSeries, ForecastPanel, ForecastRecord, QuarterlySeries, ReleaseKind};

use crate::error::{CliError, Result};
use crate::output::{fmt_f64, CsvTable};

pub const ACTUALS_HEADER: [&str; 3] = ["quarter", "release", "value"];
pub const FORECASTS_HEADER: [&str; 6] = [
    "quarter",
    "release",
    "economist_id",
    "firm_id",
    "value",
    "report_date",
];
pub const SPF_HEADER: [&str; 3] = ["quarter", "median", "mean"];

/// SPF nowcasts keyed by the aggregation they were built with.
pub type SpfNowcasts = BTreeMap<BaselineMethod, QuarterlySeries>;

/// Resolves an optional input path, failing when it was not configured or
/// does not exist.
pub fn require<'a>(path: Option<&'a PathBuf>, role: &'static str) -> Result<&'a Path> {
    let path = path.ok_or(CliError::InputNotGiven { role })?;
    if !path.is_file() {
        return Err(CliError::MissingInput {
            role,
            path: path.clone(),
        });
    }
    Ok(path)
}

struct Rows {
    path: PathBuf,
    reader: csv::Reader<File>,
}

impl Rows {
    fn open(path: &Path, header: &[&str]) -> Result<Self> {
        let file = File::open(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(file);
        let found = reader.headers().map_err(|e| csv_error(path, e))?.clone();
        if found.iter().ne(header.iter().copied()) {
            return Err(CliError::Parse {
                path: path.to_path_buf(),
                line: 1,
                message: format!(
                    "expected header `{}`, found `{}`",
                    header.join(","),
                    found.iter().collect::<Vec<_>>().join(",")
                ),
            });
        }
        Ok(Self {
            path: path.to_path_buf(),
            reader,
        })
    }

    fn for_each(mut self, mut visit: impl FnMut(&Field<'_>) -> Result<()>) -> Result<()> {
        let mut record = csv::StringRecord::new();
        loop {
            match self.reader.read_record(&mut record) {
                Ok(false) => return Ok(()),
                Ok(true) => {
                    let line = record.position().map_or(0, |p| p.line());
                    visit(&Field {
                        path: &self.path,
                        line,
                        record: &record,
                    })?;
                }
                Err(e) => return Err(csv_error(&self.path, e)),
            }
        }
    }
}

struct Field<'a> {
    path: &'a Path,
    line: u64,
    record: &'a csv::StringRecord,
}

impl Field<'_> {
    fn raw(&self, i: usize) -> &str {
        self.record.get(i).unwrap_or("")
    }

    fn parse<T>(&self, i: usize, name: &str) -> Result<T>
    where
        T: std::str::FromStr,
        T::Err: Display,
    {
        self.raw(i)
            .parse()
            .map_err(|e| self.error(format!("{name}: {e}")))
    }

    fn number(&self, i: usize, name: &str) -> Result<f64> {
        let v: f64 = self.parse(i, name)?;
        if !v.is_finite() {
            return Err(self.error(format!("{name}: non-finite value `{}`", self.raw(i))));
        }
        Ok(v)
    }

    /// Empty cells and `NA` read as missing.
    fn optional_number(&self, i: usize, name: &str) -> Result<Option<f64>> {
        match self.raw(i) {
            "" | "NA" => Ok(None),
            _ => self.number(i, name).map(Some),
        }
    }

    fn error(&self, message: String) -> CliError {
        CliError::Parse {
            path: self.path.to_path_buf(),
            line: self.line,
            message,
        }
    }
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    CliError::Parse {
        path: path.to_path_buf(),
        line: e.position().map_or(0, |p| p.line()),
        message: e.to_string(),
    }
}

/// Reads the three release series; releases absent from the file come back empty.
pub fn read_actuals(path: &Path) -> Result<[ActualSeries; 3]> {
    let mut rows: [Vec<(judgebench_core::Quarter, f64)>; 3] = Default::default();
    let mut seen = BTreeMap::new();
    Rows::open(path, &ACTUALS_HEADER)?.for_each(|f| {
        let quarter = f.parse(0, "quarter")?;
        let release: ReleaseKind = f.parse(1, "release")?;
        let value = f.number(2, "value")?;
        if let Some(first) = seen.insert((quarter, release), f.line) {
            return Err(f.error(format!(
                "duplicate value for {quarter} in release {release} (first on line {first})"
            )));
        }
        rows[release.index()].push((quarter, value));
        Ok(())
    })?;
    let [a, b, c] = rows;
    Ok([
        ActualSeries::from_rows(ReleaseKind::First, a)?,
        ActualSeries::from_rows(ReleaseKind::Second, b)?,
        ActualSeries::from_rows(ReleaseKind::Third, c)?,
    ])
}

/// Reads raw forecast records in file order. Cleaning happens later.
pub fn read_forecasts(path: &Path) -> Result<ForecastPanel> {
    let mut records = Vec::new();
    Rows::open(path, &FORECASTS_HEADER)?.for_each(|f| {
        let report_date = match f.raw(5) {
            "" => None,
            _ => Some(f.parse(5, "report_date")?),
        };
        records.push(ForecastRecord {
            quarter: f.parse(0, "quarter")?,
            release: f.parse(1, "release")?,
            economist_id: f.raw(2).to_string(),
            firm_id: f.raw(3).to_string(),
            value: f.number(4, "value")?,
            report_date,
        });
        Ok(())
    })?;
    Ok(ForecastPanel::new(records)?)
}

pub fn read_spf(path: &Path) -> Result<SpfNowcasts> {
    let mut median = QuarterlySeries::new();
    let mut mean = QuarterlySeries::new();
    Rows::open(path, &SPF_HEADER)?.for_each(|f| {
        let quarter = f.parse(0, "quarter")?;
        if median.contains_key(&quarter) || mean.contains_key(&quarter) {
            return Err(f.error(format!("duplicate SPF row for {quarter}")));
        }
        if let Some(v) = f.optional_number(1, "median")? {
            median.insert(quarter, v);
        }
        if let Some(v) = f.optional_number(2, "mean")? {
            mean.insert(quarter, v);
        }
        Ok(())
    })?;
    Ok(BTreeMap::from([
        (BaselineMethod::Median, median),
        (BaselineMethod::Mean, mean),
    ]))
}

pub fn actuals_table(actuals: &[ActualSeries]) -> CsvTable {
    let mut t = CsvTable::new(None, &ACTUALS_HEADER);
    for series in actuals {
        for (q, v) in &series.values {
            t.row([q.to_string(), series.release.to_string(), fmt_f64(*v)]);
        }
    }
    t
}

pub fn forecasts_table(panel: &ForecastPanel) -> CsvTable {
    let mut t = CsvTable::new(None, &FORECASTS_HEADER);
    for r in panel.records() {
        t.row([
            r.quarter.to_string(),
            r.release.to_string(),
            r.economist_id.clone(),
            r.firm_id.clone(),
            fmt_f64(r.value),
            r.report_date.map(|d| d.to_string()).unwrap_or_default(),
        ]);
    }
    t
}

/// Writes a single nowcast column into both SPF columns.
pub fn spf_table(spf: &QuarterlySeries) -> CsvTable {
    let mut t = CsvTable::new(None, &SPF_HEADER);
    for (q, v) in spf {
        t.row([q.to_string(), fmt_f64(*v), fmt_f64(*v)]);
    }
    t
}

pub fn truth_table(truth: &[TruthRecord]) -> CsvTable {
    let mut t = CsvTable::new(
        None,
        &[
            "economist_id",
            "quarter",
            "release",
            "baseline",
            "judgment",
            "participated",
        ],
    );
    for r in truth {
        t.row([
            r.economist_id.clone(),
            r.quarter.to_string(),
            r.release.to_string(),
            fmt_f64(r.baseline),
            fmt_f64(r.judgment),
            u8::from(r.participated).to_string(),
        ]);
    }
    t
}

/// The four files of a simulated world, named as `simulate` writes them.
pub fn world_tables(world: &SynthWorld) -> Vec<(&'static str, CsvTable)> {
    vec![
        ("actuals.csv", actuals_table(&world.actuals)),
        ("forecasts.csv", forecasts_table(&world.panel)),
        ("spf.csv", spf_table(&world.spf)),
        ("truth.csv", truth_table(&world.truth)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use judgebench_core::syngen::{simulate_world, SynthConfig};
    use std::io::Write;

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let path = dir.join(name);
        std::fs::File::create(&path)
            .unwrap()
            .write_all(text.as_bytes())
            .unwrap();
        path
    }

    #[test]
    fn simulated_world_round_trips() {
        let cfg = SynthConfig {
            n_forecasters: 5,
            n_quarters: 8,
            history_quarters: 4,
            ..SynthConfig::default()
        };
        let world = simulate_world(&cfg, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        for (name, table) in world_tables(&world) {
            write(dir.path(), name, &table.render());
        }
        let actuals = read_actuals(&dir.path().join("actuals.csv")).unwrap();
        assert_eq!(actuals, world.actuals);
        let panel = read_forecasts(&dir.path().join("forecasts.csv")).unwrap();
        assert_eq!(panel, world.panel);
        let spf = read_spf(&dir.path().join("spf.csv")).unwrap();
        assert_eq!(spf[&BaselineMethod::Median], world.spf);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "a.csv",
            "quarter,release,value\n2000Q1,1,0.5\n2000Q2,4,0.1\n",
        );
        match read_actuals(&p) {
            Err(CliError::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("release"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        let p = write(dir.path(), "b.csv", "quarter,value\n");
        assert!(matches!(
            read_actuals(&p),
            Err(CliError::Parse { line: 1, .. })
        ));
        let p = write(
            dir.path(),
            "c.csv",
            "quarter,release,value\n2000Q1,1,0.5\n2000Q1,1,0.6\n",
        );
        assert!(matches!(
            read_actuals(&p),
            Err(CliError::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn missing_and_unset_inputs_are_distinguished() {
        assert!(matches!(
            require(None, "forecasts"),
            Err(CliError::InputNotGiven { role: "forecasts" })
        ));
        let p = PathBuf::from("/nonexistent/forecasts.csv");
        let err = require(Some(&p), "forecasts").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.machine_line().contains("/nonexistent/forecasts.csv"));
    }

    #[test]
    fn spf_accepts_missing_cells() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "s.csv",
            "quarter,median,mean\n2000Q1,1.0,\n2000Q2,NA,2.0\n",
        );
        let spf = read_spf(&p).unwrap();
        assert_eq!(spf[&BaselineMethod::Median].len(), 1);
        assert_eq!(spf[&BaselineMethod::Mean].len(), 1);
    }
}
