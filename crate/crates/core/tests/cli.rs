use std::process::{Command, Output};

use serde_json::Value;

fn qwres(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qwres")).args(args).output().expect("spawn qwres")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn resonances_of_one_corner() {
    let out = qwres(&["resonances", "--preset", "one-corner", "--eps", "0.3"]);
    assert!(out.status.success());
    let v = json(&out);
    let roots = v["payload"]["roots"].as_array().unwrap();
    let total: u64 = roots.iter().map(|r| r["multiplicity"].as_u64().unwrap()).sum();
    assert_eq!(total, 16);
    let resonant = roots.iter().filter(|r| r["kind"] == "resonance").count();
    assert_eq!(resonant, 8);
    assert!(v["timing"].is_null());
    assert_eq!(v["config"]["eps"], 0.3);
}

#[test]
fn csv_header_and_rows() {
    let out = qwres(&["resonances", "--preset", "one-corner", "--eps", "0.3", "--emit", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("kappa_re,kappa_im,w_re,w_im,multiplicity,kind,residual"));
    assert_eq!(lines.count(), 16);
}

#[test]
fn output_is_deterministic() {
    let args = ["evolve", "--preset", "barrier-random", "--M0", "2", "--seed", "7", "--t", "50"];
    let a = qwres(&args);
    let b = qwres(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn exit_codes() {
    assert_eq!(qwres(&["resonances", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(qwres(&["resonances", "--eps", "1.5", "--preset", "one-corner"]).status.code(), Some(4));
    assert_eq!(qwres(&["resonances", "--preset", "corner", "--eps", "0.2"]).status.code(), Some(4));
    assert_eq!(qwres(&["trace", "--emit", "csv"]).status.code(), Some(4));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(qwres(&["resonances", "--config", bad.to_str().unwrap()]).status.code(), Some(3));
    let unknown = dir.path().join("unknown.json");
    std::fs::write(&unknown, r#"{"bogus": 1}"#).unwrap();
    assert_eq!(qwres(&["resonances", "--config", unknown.to_str().unwrap()]).status.code(), Some(3));
}

#[test]
fn config_file_and_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"preset": "one-corner", "eps": 0.3}"#).unwrap();
    let dest = dir.path().join("out.json");
    let out = qwres(&["resonances", "--config", cfg.to_str().unwrap(), "--output", dest.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&dest).unwrap()).unwrap();
    assert_eq!(v["config"]["preset"], "one-corner");

    // flags override the file
    let out = qwres(&["resonances", "--config", cfg.to_str().unwrap(), "--eps", "0.5"]);
    assert_eq!(json(&out)["config"]["eps"], 0.5);
}

#[test]
fn shape_scan_warns_beyond_half() {
    let out = qwres(&["shape-scan", "--s", "0.8", "--eps-grid", "0.2"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    let quiet = qwres(&["shape-scan", "--eps-grid", "0.2"]);
    assert!(String::from_utf8_lossy(&quiet.stderr).is_empty());
}

#[test]
fn barrier_spec_reports_dimension() {
    let v = json(&qwres(&["barrier-spec", "--M0", "2"]));
    assert_eq!(v["payload"]["N"], 80);
}
