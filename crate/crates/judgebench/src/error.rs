use std::fmt::Write as _;
use std::io;
use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("no {role} file given")]
    InputNotGiven { role: &'static str },
    #[error("{role} file {path} does not exist")]
    MissingInput { role: &'static str, path: PathBuf },
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: io::Error },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] judgebench_core::Error),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::InputNotGiven { .. } => "input-not-given",
            CliError::MissingInput { .. } => "missing-input",
            CliError::Read { .. } => "read",
            CliError::Parse { .. } => "parse",
            CliError::Write { .. } => "write",
            CliError::Config(_) => "config",
            CliError::Core(_) => "analysis",
        }
    }

    /// Input and configuration problems exit with 2, everything else with 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Write { .. } | CliError::Core(_) => 1,
            _ => 2,
        }
    }

    fn path(&self) -> Option<&PathBuf> {
        match self {
            CliError::MissingInput { path, .. }
            | CliError::Read { path, .. }
            | CliError::Parse { path, .. }
            | CliError::Write { path, .. } => Some(path),
            _ => None,
        }
    }

    /// `error kind=<kind> [path="<path>"] message="<text>"` on a single line.
    pub fn machine_line(&self) -> String {
        let mut line = format!("error kind={}", self.kind());
        if let Some(p) = self.path() {
            let _ = write!(line, " path={}", quote(&p.display().to_string()));
        }
        let _ = write!(line, " message={}", quote(&self.to_string()));
        line
    }
}

fn quote(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 2);
    out.push('"');
    for c in text.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' | '\r' => out.push(' '),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn machine_line_is_single_line() {
        let e = CliError::Parse {
            path: "a \"b\".csv".into(),
            line: 3,
            message: "bad\nvalue".into(),
        };
        let line = e.machine_line();
        assert!(!line.contains('\n'));
        assert!(line.starts_with("error kind=parse path=\"a \\\"b\\\".csv\""));
        assert_eq!(e.exit_code(), 2);
    }
}
