//! CSV rendering and serialized artifact writing.

use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};

/// Shortest representation that parses back to the same value; `-0` prints as `0`.
pub fn fmt_f64(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    format!("{v}")
}

/// Missing values print as `NA`.
pub fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), fmt_f64)
}

/// An in-memory CSV table with an optional `# title` line above the header.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    title: Option<String>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(title: Option<&str>, header: &[&str]) -> Self {
        Self {
            title: title.map(str::to_string),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// Appends a row. Panics if its width differs from the header's.
    pub fn row<I, S>(&mut self, cells: I)
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let row: Vec<String> = cells.into_iter().map(Into::into).collect();
        assert_eq!(
            row.len(),
            self.header.len(),
            "row width must match header {:?}",
            self.header
        );
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        let body =
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells");
        match &self.title {
            Some(t) => format!("# {t}\n{body}"),
            None => body,
        }
    }
}

/// One output file, relative to the output directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

impl Artifact {
    pub fn new(name: &str, contents: String) -> Self {
        Self {
            name: name.into(),
            contents,
        }
    }

    pub fn table(name: &str, table: &CsvTable) -> Self {
        Self::new(name, table.render())
    }
}

/// Writes artifacts one at a time in the given order.
pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Write {
        path: dir.to_path_buf(),
        source,
    })?;
    artifacts
        .iter()
        .map(|a| {
            let path = dir.join(&a.name);
            std::fs::write(&path, a.contents.as_bytes()).map_err(|source| CliError::Write {
                path: path.clone(),
                source,
            })?;
            Ok(path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_round_trips() {
        for v in [0.1, -2.5, 1e-300, 1.0 / 3.0, 123456.0] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_f64(-0.0), "0");
        assert_eq!(fmt_f64(1.0), "1");
        assert_eq!(fmt_opt(None), "NA");
    }

    #[test]
    fn table_renders_title_and_quotes() {
        let mut t = CsvTable::new(Some("Table 9: demo"), &["a", "b"]);
        t.row(["1", "x,y"]);
        assert_eq!(t.render(), "# Table 9: demo\na,b\n1,\"x,y\"\n");
    }

    #[test]
    #[should_panic]
    fn ragged_rows_are_rejected() {
        CsvTable::new(None, &["a", "b"]).row(["1"]);
    }
}
