//! Black-box tests of the hardy-cert binary: exit codes, emitted artifacts
//! and report determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hardy-cert"))
}

fn run(sub: &str, config: &str, dir: &Path) -> Output {
    let cfg_path = dir.join("config.json");
    fs::write(&cfg_path, config).unwrap();
    let out_dir = dir.join("out");
    bin()
        .arg(sub)
        .arg("--config")
        .arg(&cfg_path)
        .arg("--output")
        .arg(&out_dir)
        .output()
        .unwrap()
}

fn report_json(dir: &Path) -> serde_json::Value {
    let text = fs::read_to_string(dir.join("out/report.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

const EXP_PAIR: &str = r#"{
  "left": {"kind": "exponential", "params": {"rate": 1.0}},
  "right": {"kind": "exponential", "params": {"rate": 1.0}},
  "q": 2.0
}"#;

#[test]
fn certify_p_holds_exits_zero_and_emits_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run("certify-p", EXP_PAIR, tmp.path());
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    for f in ["report.json", "report.txt", "meta.json"] {
        assert!(tmp.path().join("out").join(f).exists(), "{f} missing");
    }
    let rep = report_json(tmp.path());
    assert_eq!(rep["schema"], 1);
    assert_eq!(rep["command"], "certify-p");
    assert_eq!(rep["result"]["holds"], true);
    assert_eq!(rep["result"]["b_plus"]["value"]["verdict"], "finite");
    let bp = rep["result"]["b_plus"]["value"]["value"].as_f64().unwrap();
    assert!((bp - 1.0).abs() < 1e-6);
}

#[test]
fn report_json_is_deterministic() {
    let t1 = tempfile::tempdir().unwrap();
    let t2 = tempfile::tempdir().unwrap();
    assert_eq!(run("certify-p", EXP_PAIR, t1.path()).status.code(), Some(0));
    assert_eq!(run("certify-p", EXP_PAIR, t2.path()).status.code(), Some(0));
    let b1 = fs::read(t1.path().join("out/report.json")).unwrap();
    let b2 = fs::read(t2.path().join("out/report.json")).unwrap();
    assert_eq!(b1, b2, "report.json must be byte-identical for a fixed config");
}

#[test]
fn certify_p_failure_exits_two_with_counterexample() {
    // Gaussian right weight: its dual power outgrows the exponential tail, so
    // the inequality fails.
    let cfg = r#"{
      "left": {"kind": "exponential", "params": {"rate": 1.0}},
      "right": {"kind": "gaussian"},
      "q": 2.0
    }"#;
    let tmp = tempfile::tempdir().unwrap();
    let out = run("certify-p", cfg, tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let rep = report_json(tmp.path());
    assert_eq!(rep["result"]["holds"], false);
    assert!(tmp.path().join("out/counterexample.csv").exists());
}

#[test]
fn config_errors_exit_three() {
    let tmp = tempfile::tempdir().unwrap();
    // Malformed JSON.
    let out = run("certify-p", "{not json", tmp.path());
    assert_eq!(out.status.code(), Some(3));
    // Unknown field rejected by the strict schema.
    let cfg = r#"{
      "left": {"kind": "gaussian"},
      "right": {"kind": "gaussian"},
      "q": 2.0,
      "typo_field": 1
    }"#;
    let out = run("certify-p", cfg, tmp.path());
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("\"kind\": \"config\""), "stderr: {err}");
    // Missing output directory (no flag, no config field).
    let cfg_path = tmp.path().join("no_out.json");
    fs::write(&cfg_path, EXP_PAIR).unwrap();
    let out = bin().arg("certify-p").arg("--config").arg(&cfg_path).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    // Usage error.
    let out = bin().arg("certify-p").output().unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn estimate_poincare_gaussian_spectral_gap() {
    let cfg = r#"{
      "target": {
        "kind": "poincare",
        "left": {"kind": "gaussian"},
        "right": {"kind": "gaussian"},
        "q": 2.0
      },
      "n_nodes": 64,
      "span": 10.0
    }"#;
    let tmp = tempfile::tempdir().unwrap();
    let out = run("estimate", cfg, tmp.path());
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(tmp.path().join("out/maximizer.csv").exists());
    let rep = report_json(tmp.path());
    let v = rep["result"]["value"].as_f64().unwrap();
    assert!((v - 1.0).abs() < 0.05, "gaussian estimate {v}");
}

#[test]
fn derive_h_reports_family_constant() {
    // p = 3/2 asymptotics profile at N = 7: family constant exactly 4.
    let cfg = r#"{
      "profile": {
        "kind": "power_type_g",
        "params": {"gamma": -3.0, "beta": 3.0, "alpha": -1.0},
        "theta": 2.0,
        "q": 2.0,
        "dimension": 7
      }
    }"#;
    let tmp = tempfile::tempdir().unwrap();
    let out = run("derive-h", cfg, tmp.path());
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let rep = report_json(tmp.path());
    let c = rep["result"]["c_h_family"].as_f64().unwrap();
    assert!((c - 4.0).abs() < 1e-9, "family constant {c}");
    assert_eq!(rep["result"]["optimal"], true);
}

#[test]
fn simulate_stationary_barenblatt() {
    let cfg = r#"{
      "m": 0.875,
      "p": 1.8,
      "dimension": 3,
      "u0": {"kind": "barenblatt", "d": 1.0},
      "n_cells": 100,
      "tau_end": 1.0
    }"#;
    let tmp = tempfile::tempdir().unwrap();
    let out = run("simulate", cfg, tmp.path());
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(tmp.path().join("out/trace.csv").exists());
    assert!(tmp.path().join("out/plot.svg").exists());
    let rep = report_json(tmp.path());
    assert_eq!(rep["result"]["already_stationary"], true);
}
