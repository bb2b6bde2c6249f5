use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn judgebench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_judgebench"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn files(dir: &Path) -> BTreeMap<String, String> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read_to_string(e.path()).unwrap(),
            )
        })
        .collect()
}

struct World {
    _tmp: tempfile::TempDir,
    root: PathBuf,
}

impl World {
    fn new(extra: &[&str]) -> Self {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path().to_path_buf();
        let out = root.join("world");
        let mut args = vec![
            "simulate",
            "--out",
            out.to_str().unwrap(),
            "--forecasters",
            "20",
            "--seed",
            "5",
        ];
        args.extend(extra);
        let o = judgebench(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        Self { _tmp: tmp, root }
    }

    fn input(&self, name: &str) -> String {
        self.root
            .join("world")
            .join(name)
            .to_str()
            .unwrap()
            .to_string()
    }

    fn run(&self, command: &str, out: &str) -> (Output, PathBuf) {
        let dir = self.root.join(out);
        let (a, f, s) = (
            self.input("actuals.csv"),
            self.input("forecasts.csv"),
            self.input("spf.csv"),
        );
        let o = judgebench(&[
            command,
            "--actuals",
            &a,
            "--forecasts",
            &f,
            "--spf",
            &s,
            "--out",
            dir.to_str().unwrap(),
        ]);
        (o, dir)
    }
}

#[test]
fn simulate_writes_the_three_input_files_and_truth() {
    let w = World::new(&[]);
    let names: Vec<String> = files(&w.root.join("world")).into_keys().collect();
    assert_eq!(
        names,
        ["actuals.csv", "forecasts.csv", "spf.csv", "truth.csv"]
    );
    let forecasts = std::fs::read_to_string(w.input("forecasts.csv")).unwrap();
    assert!(forecasts.starts_with("quarter,release,economist_id,firm_id,value,report_date\n"));
}

#[test]
fn report_is_the_union_of_the_subcommands() {
    let w = World::new(&[]);
    let (o, report_dir) = w.run("report", "report");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut report = files(&report_dir);
    assert!(report.remove("manifest.json").is_some());
    let report_diagnostics = report.remove("diagnostics.csv").unwrap();

    let mut union = BTreeMap::new();
    let mut diagnostics = String::from("command,scope,message\n");
    for command in [
        "describe",
        "judgment",
        "efficiency",
        "accuracy",
        "persistence",
        "ar-forecast",
    ] {
        let (o, dir) = w.run(command, command);
        assert!(
            o.status.success(),
            "{command}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        let mut produced = files(&dir);
        let diag = produced.remove("diagnostics.csv").unwrap();
        diagnostics.extend(diag.lines().skip(1).map(|l| format!("{l}\n")));
        for (name, contents) in produced {
            assert!(
                union.insert(name.clone(), contents).is_none(),
                "{name} written by two commands"
            );
        }
    }
    assert_eq!(report, union);
    assert_eq!(report_diagnostics, diagnostics);
}

#[test]
fn missing_forecasts_file_exits_2_naming_the_path() {
    let w = World::new(&[]);
    let missing = w.root.join("nowhere").join("forecasts.csv");
    let out = w.root.join("out");
    let o = judgebench(&[
        "describe",
        "--actuals",
        &w.input("actuals.csv"),
        "--forecasts",
        missing.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let stderr = String::from_utf8(o.stderr).unwrap();
    assert_eq!(stderr.lines().count(), 1, "{stderr}");
    assert!(stderr.starts_with("error kind=missing-input"), "{stderr}");
    assert!(stderr.contains(missing.to_str().unwrap()), "{stderr}");
    assert!(!out.exists());
}

#[test]
fn malformed_input_reports_the_line() {
    let w = World::new(&[]);
    let bad = w.root.join("bad.csv");
    std::fs::write(&bad, "quarter,release,value\n2000Q1,1,0.5\n2000Q5,1,0.5\n").unwrap();
    let o = judgebench(&[
        "ar-forecast",
        "--actuals",
        bad.to_str().unwrap(),
        "--out",
        w.root.join("o").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let stderr = String::from_utf8(o.stderr).unwrap();
    assert!(
        stderr.contains("kind=parse") && stderr.contains(":3:"),
        "{stderr}"
    );
}

#[test]
fn missing_spf_is_a_diagnostic_not_a_failure() {
    let w = World::new(&[]);
    let out = w.root.join("eff");
    let o = judgebench(&[
        "efficiency",
        "--actuals",
        &w.input("actuals.csv"),
        "--forecasts",
        &w.input("forecasts.csv"),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let produced = files(&out);
    assert!(produced["diagnostics.csv"].contains("efficiency,spf,"));
    let efficiency_row = produced["table4.csv"]
        .lines()
        .find(|l| l.starts_with("efficiency,"))
        .unwrap();
    assert!(
        efficiency_row.split(',').skip(1).all(|c| c == "ERROR"),
        "{efficiency_row}"
    );
}

#[test]
fn config_file_is_overridden_by_flags_and_hash_tracks_semantics() {
    let w = World::new(&[]);
    let cfg = w.root.join("run.toml");
    std::fs::write(&cfg, "alpha = 0.10\nbaseline = \"mean\"\n").unwrap();
    let manifest = |out: &str, extra: &[&str]| {
        let dir = w.root.join(out);
        let (a, f) = (w.input("actuals.csv"), w.input("forecasts.csv"));
        let mut args = vec![
            "report",
            "--config",
            cfg.to_str().unwrap(),
            "--actuals",
            &a,
            "--forecasts",
            &f,
        ];
        let d = dir.to_str().unwrap().to_string();
        args.extend(["--out", &d]);
        args.extend(extra);
        let o = judgebench(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let text = std::fs::read_to_string(dir.join("manifest.json")).unwrap();
        serde_json::from_str::<serde_json::Value>(&text).unwrap()
    };
    let a = manifest("a", &[]);
    let b = manifest("b", &[]);
    let c = manifest("c", &["--alpha", "0.05"]);
    assert_eq!(a["config"]["alpha"], 0.10);
    assert_eq!(a["config"]["baseline"], "mean");
    assert_eq!(c["config"]["alpha"], 0.05);
    assert_eq!(a["config_hash"], b["config_hash"]);
    assert_ne!(a["config_hash"], c["config_hash"]);
    assert_eq!(a["inputs"].as_array().unwrap().len(), 2);
}

#[test]
fn recovery_writes_summary_and_replications() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("rec");
    let o = Command::new(env!("CARGO_BIN_EXE_judgebench"))
        .args([
            "recovery",
            "--replications",
            "3",
            "--forecasters",
            "30",
            "--quarters",
            "20",
            "--out",
            out.to_str().unwrap(),
        ])
        .env("JUDGEBENCH_THREADS", "2")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let produced = files(&out);
    assert_eq!(produced["recovery_replications.csv"].lines().count(), 4);
    let summary = &produced["recovery_summary.csv"];
    assert!(
        summary.lines().nth(2).unwrap().starts_with("0.1,30,20,3,"),
        "{summary}"
    );
}

#[test]
fn leave_one_out_and_absolute_loss_change_the_outputs() {
    let w = World::new(&[]);
    let (a, f) = (w.input("actuals.csv"), w.input("forecasts.csv"));
    let run = |command: &str, out: &str, extra: &[&str]| {
        let dir = w.root.join(out);
        let d = dir.to_str().unwrap().to_string();
        let mut args = vec![command, "--actuals", &a, "--forecasts", &f, "--out", &d];
        args.extend(extra);
        let o = judgebench(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        files(&dir)
    };
    let plain = run("judgment", "j0", &[]);
    let loo = run("judgment", "j1", &["--leave-one-out"]);
    assert_ne!(plain["judgment.csv"], loo["judgment.csv"]);
    let squared = run("accuracy", "a0", &[]);
    let absolute = run("accuracy", "a1", &["--loss", "absolute"]);
    assert_ne!(squared["accuracy_detail.csv"], absolute["accuracy_detail.csv"]);
}
