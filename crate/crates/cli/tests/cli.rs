use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_price-response");
const WINDOW: &str = "09:40:00-10:00:00";

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).current_dir(dir).args(args).output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> serde_json::Value {
    let out = run(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("manifest on stdout")
}

fn synth(dir: &Path) {
    ok(dir, &["synth", "--days", "2", "--seconds", "1200", "--symbols", "AA,BB", "--spread", "0.02,0.2", "--tau-max", "30", "--out", "d"]);
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn synth_then_response_gives_one_row_per_lag() {
    let t = tempfile::tempdir().unwrap();
    synth(t.path());
    let m = ok(t.path(), &["response", "--i", "AA", "--scale", "physical", "--tau-max", "25", "--data", "d", "--window", WINDOW, "--out", "o"]);
    let table = rows(&t.path().join("o/response_physical_AA_AA.csv"));
    assert_eq!(table[0], ["tau", "value", "count", "stderr"]);
    assert_eq!(table.len(), 26);
    assert_eq!(table[25][0], "25");
    assert_eq!(m["command"], "response");
    assert_eq!(m["inputs"][0]["quote_rejects"], 0);
    assert!(t.path().join("o/response.manifest.json").exists());
    assert!(t.path().join("o/response_physical_AA_AA.json").exists());
}

#[test]
fn j_defaults_to_i() {
    let t = tempfile::tempdir().unwrap();
    synth(t.path());
    let common = ["--tau-max", "10", "--data", "d", "--window", WINDOW, "--out", "o"];
    ok(t.path(), &[&["response", "--i", "BB"][..], &common].concat());
    let own = fs::read(t.path().join("o/response_physical_BB_BB.csv")).unwrap();
    ok(t.path(), &[&["response", "--i", "BB", "--j", "BB"][..], &common].concat());
    assert_eq!(own, fs::read(t.path().join("o/response_physical_BB_BB.csv")).unwrap());
}

#[test]
fn decompose_writes_five_curves() {
    let t = tempfile::tempdir().unwrap();
    synth(t.path());
    ok(t.path(), &["decompose", "--tau-prime", "10", "--i", "AA", "--j", "BB", "--tau-max", "20", "--data", "d", "--window", WINDOW, "--out", "o"]);
    let table = rows(&t.path().join("o/decompose_AA_BB.csv"));
    assert_eq!(table[0], ["tau", "short", "long", "sum", "original", "baseline"]);
    assert_eq!(table.len(), 21);
}

#[test]
fn shift_scan_writes_point_files_and_summary() {
    let t = tempfile::tempdir().unwrap();
    synth(t.path());
    ok(t.path(), &["shift-scan", "--i", "AA", "--mode", "fixed-shift", "--value", "1", "--grid", "1:9:4", "--tau-max", "9", "--data", "d", "--window", WINDOW, "--out", "o"]);
    let summary = rows(&t.path().join("o/shift_fixed-shift_1_physical_AA_AA.csv"));
    assert_eq!(summary.iter().skip(1).map(|r| r[0].as_str()).collect::<Vec<_>>(), ["1", "5", "9"]);
    for g in [1, 5, 9] {
        assert!(t.path().join(format!("o/shift_fixed-shift_1_physical_AA_AA/point_{g}.csv")).exists());
    }
}

#[test]
fn spread_groups_from_universe() {
    let t = tempfile::tempdir().unwrap();
    synth(t.path());
    let m = ok(t.path(), &["spread-groups", "--universe", "d/universe.csv", "--tau-max", "5", "--window", WINDOW, "--out", "o"]);
    assert_eq!(m["summary"]["bands"]["AA"], "1");
    assert_eq!(m["summary"]["bands"]["BB"], "3");
    assert!(t.path().join("o/band_1_physical.csv").exists());
    assert!(!t.path().join("o/band_2_physical.csv").exists());
}

#[test]
fn ingest_signs_and_diagnose() {
    let t = tempfile::tempdir().unwrap();
    synth(t.path());
    ok(t.path(), &["ingest", "--quotes", "d/AA.quotes.csv", "--trades", "d/AA.trades.csv", "--symbol", "AA", "--window", WINDOW, "--out", "o"]);
    assert!(t.path().join("o/AA/2008-01-02.midpoints.csv").exists());
    let m = ok(t.path(), &["signs", "--trades", "d/AA.trades.csv", "--symbol", "AA", "--window", WINDOW, "--out", "o"]);
    assert_eq!(m["summary"]["classified_trades"].as_u64().unwrap() + m["summary"]["unresolved_trades"].as_u64().unwrap(), 2400);
    let m = ok(t.path(), &["diagnose", "--i", "AA", "--data", "d", "--window", WINDOW, "--out", "o"]);
    assert!((m["summary"]["average_spread"].as_f64().unwrap() - 0.02).abs() < 1e-9);
}

#[test]
fn usage_errors_exit_with_two() {
    let t = tempfile::tempdir().unwrap();
    assert_eq!(run(t.path(), &["response", "--i", "A", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(run(t.path(), &["frobnicate"]).status.code(), Some(2));
    fs::write(t.path().join("bad.cfg"), "nonsense_key = 1\n").unwrap();
    assert_eq!(run(t.path(), &["--config", "bad.cfg", "response", "--i", "A"]).status.code(), Some(2));
}

#[test]
fn data_errors_exit_with_one() {
    let t = tempfile::tempdir().unwrap();
    let out = run(t.path(), &["response", "--i", "MISSING", "--data", "nowhere", "--out", "o"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("MISSING"));
}

#[test]
fn config_file_fills_unset_flags() {
    let t = tempfile::tempdir().unwrap();
    synth(t.path());
    fs::write(t.path().join("run.cfg"), format!("tau_max = 7\nscale = trade\nwindow = {WINDOW}\ndata = d\nseed = 1\n")).unwrap();
    let m = ok(t.path(), &["--config", "run.cfg", "response", "--i", "AA", "--scale", "activity", "--out", "o"]);
    assert_eq!(m["config_file"], "run.cfg");
    assert_eq!(rows(&t.path().join("o/response_activity_AA_AA.csv")).len(), 8);
}

#[test]
fn manifest_argv_reproduces_the_run() {
    let t = tempfile::tempdir().unwrap();
    synth(t.path());
    fs::write(t.path().join("run.cfg"), format!("tau_max = 12\nwindow = {WINDOW}\ndata = d\n")).unwrap();
    let m = ok(t.path(), &["--config", "run.cfg", "response", "--i", "AA", "--j", "BB", "--out", "o"]);
    let first = fs::read(t.path().join("o/response_physical_AA_BB.csv")).unwrap();
    let argv: Vec<String> = m["argv"].as_array().unwrap().iter().map(|v| v.as_str().unwrap().to_string()).collect();
    let replay: Vec<&str> = argv[1..].iter().map(|s| s.as_str()).filter(|s| *s != "o").collect();
    let mut replay: Vec<&str> = replay.into_iter().filter(|s| *s != "--out").collect();
    replay.extend(["--out", "o2"]);
    ok(t.path(), &replay);
    assert_eq!(first, fs::read(t.path().join("o2/response_physical_AA_BB.csv")).unwrap());
}
