//! The command-line front end, run as a subprocess.

use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_describeworld"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = cli(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn json_lines(path: &Path) -> Vec<serde_json::Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn tasks_enumerate_writes_the_universe() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tasks.jsonl");
    let out = ok(&["tasks", "enumerate", "--out", path.to_str().unwrap()]);
    let lines = json_lines(&path);
    assert_eq!(lines.len(), 10604);
    assert!(lines[0]["task"].is_string() && lines[0]["category"].is_string());
    let summary: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(summary["end_goals"], 2651);
}

#[test]
fn map_gen_is_seeded() {
    let a = ok(&["map", "gen", "--seed", "5"]).stdout;
    let b = ok(&["map", "gen", "--seed", "5"]).stdout;
    let c = ok(&["map", "gen", "--seed", "6"]).stdout;
    assert_eq!(a, b);
    assert_ne!(a, c);
    let map: serde_json::Value = serde_json::from_slice(&a).unwrap();
    let grid = map["grid"].as_array().unwrap();
    assert_eq!(grid.len(), 8);
    assert!(grid.iter().all(|row| row.as_array().unwrap().len() == 8));
}

#[test]
fn split_export_and_rollout_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("split.json");
    let data = dir.path().join("train.jsonl");
    ok(&["splits", "build", "hidden_subtask", "--out", manifest.to_str().unwrap()]);
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&manifest).unwrap()).unwrap();
    assert_eq!(m["name"], "hidden_subtask");
    ok(&[
        "dataset",
        "export",
        "--manifest",
        manifest.to_str().unwrap(),
        "--part",
        "test",
        "--demos",
        "2",
        "--limit",
        "3",
        "--out",
        data.to_str().unwrap(),
    ]);
    let records = json_lines(&data);
    assert_eq!(records.len(), 6);
    for r in &records {
        assert_eq!(
            r["length"].as_u64().unwrap() as usize,
            r["transitions"].as_array().unwrap().len()
        );
        assert_eq!(r["outcome"], "goal_complete");
    }

    let out = ok(&["oracle", "rollout", "--task", "make net.", "--mode", "expert"]);
    let r: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["outcome"], "goal_complete");
}

#[test]
fn conformance_report_passes() {
    let out = ok(&["conformance", "report"]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let items = report["items"].as_array().unwrap();
    assert!(!items.is_empty());
    assert!(items.iter().all(|i| i["passed"] == true), "{items:#?}");
}

#[test]
fn eval_run_with_the_builtin_agent() {
    let agent = format!("{} agent oracle", env!("CARGO_BIN_EXE_describeworld"));
    let out = ok(&[
        "eval",
        "run",
        "--scenario",
        "description",
        "--agent-cmd",
        &agent,
        "--tasks",
        "2",
        "--instances-per-task",
        "2",
    ]);
    let rep: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rep["episodes"], 4);
    assert_eq!(rep["completion"], 100.0);
}

#[test]
fn usage_errors_exit_2_with_json() {
    let out = cli(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "usage");
}

#[test]
fn runtime_errors_exit_1_with_json() {
    let out = cli(&["oracle", "rollout", "--task", "fly to the moon."]);
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "runtime");
    let out = cli(&["tasks", "enumerate", "--config", "/nonexistent.toml"]);
    assert_eq!(out.status.code(), Some(1));
}
