use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn run(config: &Value, out: &Path, extra: &[&str]) -> Output {
    let path = out.join("config.json");
    std::fs::create_dir_all(out).unwrap();
    std::fs::write(&path, serde_json::to_string(config).unwrap()).unwrap();
    Command::new(env!("CARGO_BIN_EXE_fermicert"))
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(out.join("report"))
        .args(extra)
        .output()
        .unwrap()
}

fn stderr_json(output: &Output) -> Value {
    serde_json::from_slice(&output.stderr).expect("stderr is a JSON error")
}

fn fields(err: &Value) -> Vec<String> {
    err["diagnostics"].as_array().unwrap().iter().map(|d| d["field"].as_str().unwrap().to_owned()).collect()
}

#[test]
fn empty_config_lists_missing_fields() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&json!({}), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_json(&out);
    assert_eq!(err["error"], "invalid-config");
    let f = fields(&err);
    assert!(f.contains(&"task".to_owned()) && f.contains(&"lattice".to_owned()), "{f:?}");
}

#[test]
fn malformed_sections_are_reported_by_field() {
    let dir = tempfile::tempdir().unwrap();
    let config = json!({
        "task": "lr-certify",
        "lattice": { "lengths": [4] },
        "model": { "name": "hopping_chain", "j": "strong" },
        "f_function": { "nu": 1.0, "epsilon": 1.0 },
        "observables": { "a": { "kind": "number", "sites": [9] }, "b": { "kind": "number", "sites": [3] } },
        "colour": "blue"
    });
    let out = run(&config, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(1));
    let f = fields(&stderr_json(&out));
    for expected in ["model", "observables.a", "colour"] {
        assert!(f.iter().any(|x| x == expected), "{expected} missing from {f:?}");
    }
}

#[test]
fn oversized_lattice_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = json!({ "task": "model-info", "lattice": { "lengths": [20] }, "model": { "name": "hopping_chain" } });
    let out = run(&config, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_json(&out);
    assert!(err["diagnostics"].as_array().unwrap().iter().any(|d| d["message"].as_str().unwrap().contains("20")));
}

#[test]
fn periodic_kitaev_chain_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = json!({
        "task": "gap-certify",
        "lattice": { "lengths": [6], "boundary": "periodic" },
        "model": { "name": "kitaev_chain" }
    });
    let out = run(&config, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(fields(&stderr_json(&out)).contains(&"lattice.boundary".to_owned()));
}

#[test]
fn small_run_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = json!({
        "task": "model-info",
        "lattice": { "lengths": [3, 2] },
        "model": { "name": "random_even", "range": 1, "strength": 1.0 }
    });
    let read = |name: &str| std::fs::read(dir.path().join("report").join(name)).unwrap();
    let first = run(&config, dir.path(), &["--seed", "7"]);
    assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stderr));
    let (json_a, csv_a) = (read("model-info.json"), read("model-info.csv"));
    let second = run(&config, dir.path(), &["--seed", "7", "--threads", "2"]);
    assert_eq!(second.status.code(), Some(0));
    assert_eq!(json_a, read("model-info.json"));
    assert_eq!(csv_a, read("model-info.csv"));
    let report: Value = serde_json::from_slice(&json_a).unwrap();
    assert_eq!(report["seed"], 7);
    assert_eq!(report["status"], "passed");
}

#[test]
fn gap_closing_flow_exits_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let config = json!({
        "task": "flow-check",
        "lattice": { "lengths": [4] },
        "model": { "name": "flat_band", "width": 2, "theta": 0.5 },
        "flow": { "path": "gap_closing", "points": 11, "gap_min": 0.2 }
    });
    let out = run(&config, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["error"], "gap-closure");
    let s = err["location"]["s"].as_f64().unwrap();
    assert!((s - 0.8).abs() < 1e-8, "closure located at {s}");
}

#[test]
fn lr_certify_writes_three_files() {
    let dir = tempfile::tempdir().unwrap();
    let config = json!({
        "task": "lr-certify",
        "lattice": { "lengths": [4] },
        "model": { "name": "hopping_chain" },
        "f_function": { "nu": 1.0, "epsilon": 1.0 },
        "observables": { "a": { "kind": "annihilator", "site": 0 }, "b": { "kind": "annihilator", "site": 3 } },
        "time": { "end": 1.0 }
    });
    let out = run(&config, dir.path(), &["--grid", "5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = dir.path().join("report");
    let csv = std::fs::read_to_string(report.join("lr-certify.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
    assert!(csv.lines().nth(1).unwrap().ends_with("anticommutator"));
    assert!(report.join("lr-certify.plot.dat").exists());
}
