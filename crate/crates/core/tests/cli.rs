use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn geoaction(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geoaction"))
        .args(args)
        .env_remove("GEOACTION_THREADS")
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn minimize_then_eval_reproduces_the_action() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = fixture("double_well.toml");
    let out = geoaction(&["minimize", "--scenario", s(&scenario), "--out", s(dir.path()), "--nodes", "64"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&dir.path().join("minimize.json"));
    let action = report["action"].as_f64().unwrap();
    assert!((action - 0.5).abs() < 5e-3, "action {action}");

    let curve = dir.path().join("curve.csv");
    let eval_dir = dir.path().join("eval");
    let out = geoaction(&["eval", "--scenario", s(&scenario), "--curve", s(&curve), "--out", s(&eval_dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let value = read_json(&eval_dir.join("eval.json"))["value"].as_f64().unwrap();
    assert!((value - action).abs() < 1e-9 * action, "{value} vs {action}");
}

#[test]
fn verify_reports_the_rejected_manifold() {
    let dir = tempfile::tempdir().unwrap();
    let out = geoaction(&["verify", "--scenario", s(&fixture("limit_cycle.toml")), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("PASS admissibility"), "{stdout}");
    let report = fs::read_to_string(dir.path().join("verify.json")).unwrap();
    assert!(report.contains("crossing_loop"));
}

#[test]
fn wrong_dimension_curve_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let curve = dir.path().join("c.csv");
    fs::write(&curve, "i,x1,x2,s\n0,1,0,0\n1,2,0,1\n").unwrap();
    let out = geoaction(&["eval", "--scenario", s(&fixture("birth_death.toml")), "--curve", s(&curve)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dimension"));
}

#[test]
fn scenario_without_action_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(fixture("double_well.toml")).unwrap();
    let start = text.find("[action]").unwrap();
    let end = start + text[start + 1..].find("\n[").unwrap() + 1;
    let broken = dir.path().join("broken.toml");
    fs::write(&broken, format!("{}{}", &text[..start], &text[end..])).unwrap();
    let out = geoaction(&["minimize", "--scenario", s(&broken)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("action"));
}

#[test]
fn same_seed_gives_identical_files() {
    let scenario = fixture("three_basin.toml");
    let runs: Vec<_> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            let out = geoaction(&["criteria", "--scenario", s(&scenario), "--out", s(dir.path()), "--seed", "11"]);
            assert!(out.status.success());
            let files = ["verdicts.json", "verdicts.csv"].map(|f| fs::read(dir.path().join(f)).unwrap());
            (files, dir)
        })
        .collect();
    assert_eq!(runs[0].0, runs[1].0);
}
