use std::fs;
use std::path::Path;
use std::process::Command;

use boardnet::synth::SynthConfig;
use boardnet_cli::commands::{cmd_synth, cmd_validate, InputPaths};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_boardnet"))
}

fn small_bundle(dir: &Path, years: usize) {
    let config = SynthConfig {
        corporations: 40,
        director_pool: 40,
        years,
        trading_days: 60,
        seed: 5,
        ..SynthConfig::default()
    };
    cmd_synth(&config, dir).unwrap();
}

fn files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    v.sort();
    v
}

#[test]
fn synth_writes_four_tables_deterministically() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [a.path(), b.path()] {
        let out = bin()
            .args(["synth", "--corporations", "30", "--seed", "4", "--out"])
            .arg(d)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(files(a.path()), ["boards.csv", "meta.csv", "prices.csv", "traders.csv"]);
    for f in files(a.path()) {
        assert_eq!(fs::read(a.path().join(&f)).unwrap(), fs::read(b.path().join(&f)).unwrap(), "{f}");
    }
}

#[test]
fn clean_bundle_validates_with_zero_issues() {
    let d = tempfile::tempdir().unwrap();
    small_bundle(d.path(), 1);
    let out = bin()
        .arg("validate")
        .args(["--boards", "boards.csv", "--prices", "prices.csv", "--meta", "meta.csv"])
        .current_dir(d.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("0 issues"));
}

#[test]
fn negative_price_is_located() {
    let d = tempfile::tempdir().unwrap();
    small_bundle(d.path(), 1);
    let path = d.path().join("prices.csv");
    let text = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let fields: Vec<&str> = lines[5].split(',').collect();
    lines[5] = format!("{},{},-3.5", fields[0], fields[1]);
    fs::write(&path, lines.join("\n") + "\n").unwrap();

    let diag = cmd_validate(&InputPaths::in_dir(d.path()), 0.05).unwrap();
    assert_eq!(diag.error_count(), 1, "{:?}", diag.issues);
    let issue = diag.issues.iter().find(|i| i.severity == boardnet::ingest::Severity::Error).unwrap();
    assert_eq!(issue.line, Some(6));
    assert!(issue.source.ends_with("prices.csv"));

    let out = bin()
        .arg("validate")
        .args(["--boards", "boards.csv", "--prices", "prices.csv", "--meta", "meta.csv"])
        .current_dir(d.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("prices.csv:6"));
}

#[test]
fn orphan_ticker_is_a_warning() {
    let d = tempfile::tempdir().unwrap();
    small_bundle(d.path(), 1);
    let path = d.path().join("prices.csv");
    let mut text = fs::read_to_string(&path).unwrap();
    text.push_str("ZZZZ,2007-01-02,10\nZZZZ,2007-01-03,11\n");
    fs::write(&path, text).unwrap();
    let diag = cmd_validate(&InputPaths::in_dir(d.path()), 0.05).unwrap();
    assert_eq!(diag.error_count(), 0);
    assert!(diag.issues.iter().any(|i| i.message.contains("ZZZZ")), "{:?}", diag.issues);
}

#[test]
fn analyze_restricted_to_one_year() {
    let d = tempfile::tempdir().unwrap();
    small_bundle(d.path(), 2);
    let out_dir = d.path().join("run");
    let out = bin()
        .arg("analyze")
        .args(["--boards", "boards.csv", "--prices", "prices.csv", "--meta", "meta.csv", "--traders", "traders.csv"])
        .args(["--years", "2008", "--replicates", "100", "--min-sector", "3", "--out"])
        .arg(&out_dir)
        .current_dir(d.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let names = files(&out_dir);
    assert!(names.contains(&"report_2008.json".to_string()));
    assert!(!names.iter().any(|n| n.contains("2007")));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("report_2008.json")).unwrap()).unwrap();
    assert_eq!(report["delta"]["previous_year"], 2007);
    let run: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("run.json")).unwrap()).unwrap();
    assert_eq!(run["config"]["replicates"], 100);
}

#[test]
fn bad_path_fails_with_message() {
    let d = tempfile::tempdir().unwrap();
    let out = bin()
        .arg("analyze")
        .args(["--boards", "nope.csv", "--prices", "nope.csv", "--meta", "nope.csv", "--out"])
        .arg(d.path().join("run"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.csv"));
}

#[test]
fn config_file_composes_with_flags() {
    let d = tempfile::tempdir().unwrap();
    small_bundle(d.path(), 1);
    fs::write(
        d.path().join("run.conf"),
        "boards = boards.csv\nprices = prices.csv\nmeta = meta.csv\nreplicates = 150\nseed = 9\nmethod = spearman\nmin_sector = 3\n",
    )
    .unwrap();
    let out = bin()
        .args(["analyze", "--config", "run.conf", "--seed", "11", "--out", "run"])
        .env("BOARDNET_REPLICATES", "120")
        .current_dir(d.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.path().join("run/run.json")).unwrap()).unwrap();
    assert_eq!(run["config"]["seed"], 11);
    assert_eq!(run["config"]["replicates"], 120);
    assert_eq!(run["config"]["methods"], serde_json::json!(["spearman"]));
}

#[test]
fn too_few_replicates_rejected() {
    let d = tempfile::tempdir().unwrap();
    small_bundle(d.path(), 1);
    let out = bin()
        .args(["analyze", "--boards", "boards.csv", "--prices", "prices.csv", "--meta", "meta.csv"])
        .args(["--replicates", "50", "--out", "run"])
        .current_dir(d.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("replicates"));
}

#[test]
fn network_summary_prints_json() {
    let d = tempfile::tempdir().unwrap();
    small_bundle(d.path(), 2);
    let out = bin()
        .args(["network-summary", "--boards", "boards.csv", "--meta", "meta.csv", "--years", "2007"])
        .current_dir(d.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 1);
    assert_eq!(v[0]["corporations"], 40);
}
