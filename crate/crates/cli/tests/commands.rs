use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn aerocov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aerocov"))
        .args(args)
        .env_remove("AEROCOV_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn write_scenario(dir: &TempDir, name: &str, body: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_slice(&fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

const TWO_CELLS: &str = r#"{
  "network": {"cells": [
    {"id": 1, "site_id": 0, "position_m": [0, 0, 75], "boresight_azimuth_deg": 0},
    {"id": 2, "site_id": 0, "position_m": [0, 0, 75], "boresight_azimuth_deg": 0}
  ]},
  "groups": [{"group_id": "g", "pairs": [{"aerial_coverage_cell": 1, "mainlobe_indication_cell": 2}]}]
}"#;

#[test]
fn fly_walkthrough_writes_the_expected_decision_log() {
    let out = TempDir::new().unwrap();
    let dir = out.path().to_str().unwrap();
    let run = aerocov(&["fly", scenario("walkthrough.json").to_str().unwrap(), "--out", dir]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));

    let log = fs::read_to_string(out.path().join("flight_0_decisions.log")).unwrap();
    let decisions: Vec<(String, Value, Value)> = log
        .lines()
        .map(|l| {
            let v: Value = serde_json::from_str(l).unwrap();
            (
                v["outcome"].as_str().unwrap().to_string(),
                v["reason"].clone(),
                v["target"].clone(),
            )
        })
        .collect();
    assert_eq!(
        decisions,
        vec![
            ("ignore".into(), "best-not-aerial-coverage-cell".into(), Value::Null),
            ("ignore".into(), "best-not-aerial-coverage-cell".into(), Value::Null),
            ("ignore".into(), "indication-cell-missing".into(), Value::Null),
            ("execute".into(), Value::Null, 5.into()),
        ]
    );

    let m = manifest(out.path());
    for entry in m["outputs"].as_array().unwrap() {
        assert!(out.path().join(entry["path"].as_str().unwrap()).exists());
    }
    assert_eq!(m["outputs"].as_array().unwrap().len(), 4);
    assert_eq!(m["scenario_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn baseline_makes_more_handover_decisions_on_the_walkthrough() {
    let metrics = |policy: Option<&str>| {
        let out = TempDir::new().unwrap();
        let path = scenario("walkthrough.json");
        let mut args = vec!["fly", path.to_str().unwrap(), "--out", out.path().to_str().unwrap()];
        if let Some(p) = policy {
            args.extend(["--policy", p]);
        }
        assert_eq!(code(&aerocov(&args)), 0);
        let m: Value = serde_json::from_slice(&fs::read(out.path().join("flight_0_metrics.json")).unwrap()).unwrap();
        m["handover_count"].as_u64().unwrap()
    };
    assert!(metrics(Some("baseline")) > metrics(None));
}

#[test]
fn identical_runs_give_identical_files() {
    let run = || {
        let out = TempDir::new().unwrap();
        let path = scenario("standard.json");
        let args = [
            "fly",
            path.to_str().unwrap(),
            "--flight",
            "1",
            "--out",
            out.path().to_str().unwrap(),
        ];
        assert_eq!(code(&aerocov(&args)), 0);
        out
    };
    let (a, b) = (run(), run());
    let (ma, mb) = (manifest(a.path()), manifest(b.path()));
    assert_eq!(ma["scenario_hash"], mb["scenario_hash"]);
    assert_eq!(ma["outputs"], mb["outputs"]);
    for entry in ma["outputs"].as_array().unwrap() {
        let name = entry["path"].as_str().unwrap();
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn coverage_writes_grid_sidecar_and_fragmentation() {
    let out = TempDir::new().unwrap();
    let path = scenario("standard.json");
    let run = aerocov(&[
        "coverage",
        path.to_str().unwrap(),
        "--height",
        "300",
        "--filter",
        "group:group-1",
        "--resolution",
        "100",
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let csv = fs::read_to_string(out.path().join("grid_0_h300.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("x_m,y_m,best_cell,rss_dbm"));
    assert_eq!(csv.lines().count(), 1 + 51 * 51);
    let sidecar: Value = serde_json::from_slice(&fs::read(out.path().join("grid_0_h300.json")).unwrap()).unwrap();
    assert_eq!(sidecar["filter"], "group:group-1");
    let frag: Value =
        serde_json::from_slice(&fs::read(out.path().join("grid_0_h300_fragmentation.json")).unwrap()).unwrap();
    let cells: Vec<&String> = frag["per_cell_components"].as_object().unwrap().keys().collect();
    assert_eq!(cells, ["22", "35", "45"]);
}

#[test]
fn output_directory_comes_from_the_environment() {
    let out = TempDir::new().unwrap();
    let run = Command::new(env!("CARGO_BIN_EXE_aerocov"))
        .args(["fly", scenario("walkthrough.json").to_str().unwrap()])
        .env("AEROCOV_OUT_DIR", out.path())
        .output()
        .unwrap();
    assert_eq!(code(&run), 0);
    assert!(out.path().join("manifest.json").exists());
}

#[test]
fn input_errors_exit_with_one() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    let walkthrough = scenario("walkthrough.json");
    let walkthrough = walkthrough.to_str().unwrap();
    assert_eq!(code(&aerocov(&["coverage", "does-not-exist.json", "--out", out])), 1);
    assert_eq!(
        code(&aerocov(&[
            "fly",
            walkthrough,
            "--policy",
            "bcs:nonexistent",
            "--out",
            out
        ])),
        1
    );
    assert_eq!(code(&aerocov(&["fly", walkthrough, "--flight", "7", "--out", out])), 1);
    assert_eq!(
        code(&aerocov(&[
            "coverage",
            walkthrough,
            "--height",
            "300",
            "--filter",
            "group:nope",
            "--out",
            out
        ])),
        1
    );
    assert_eq!(code(&aerocov(&["frobnicate"])), 1);

    let broken = write_scenario(&dir, "broken.json", "{\n  \"network\": {,}\n}");
    let run = aerocov(&["validate", &broken]);
    assert_eq!(code(&run), 1);
    assert!(String::from_utf8_lossy(&run.stderr).contains("line 2"));

    // strict loading rejects a co-sited pair
    let co_sited = write_scenario(&dir, "co-sited.json", TWO_CELLS);
    assert_eq!(code(&aerocov(&["geometry", &co_sited])), 1);
}

#[test]
fn geometry_reports_the_bcs_range() {
    let path = scenario("standard.json");
    let run = aerocov(&["geometry", path.to_str().unwrap(), "--cell", "0", "--height", "300"]);
    assert_eq!(code(&run), 0);
    let v = stdout_json(&run);
    let range = v["bcs_min_range_m"].as_f64().unwrap();
    assert!((range - 225.0 * (2.0 + 3f64.sqrt())).abs() < 1e-6);
    assert_eq!(v["mainlobe_section"]["kind"], "hyperbola");
    assert!((v["mainlobe_section"]["apex_range"].as_f64().unwrap() - range).abs() < 1e-6);
    let intervals = v["footprint"]["intervals"].as_array().unwrap();
    assert!(intervals
        .iter()
        .any(|iv| (iv["start_range"].as_f64().unwrap() - range).abs() < 1e-6));

    let below = aerocov(&["geometry", path.to_str().unwrap(), "--height", "50"]);
    assert_eq!(code(&below), 2);
    assert_eq!(
        code(&aerocov(&["geometry", path.to_str().unwrap(), "--cell", "999"])),
        1
    );
}

#[test]
fn validate_reports_pairs() {
    let path = scenario("standard.json");
    let run = aerocov(&["validate", path.to_str().unwrap()]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let v = stdout_json(&run);
    let pairs: usize = v["groups"]
        .as_array()
        .unwrap()
        .iter()
        .map(|g| g["pairs"].as_array().unwrap().len())
        .sum();
    assert_eq!(pairs, 9);

    let dir = TempDir::new().unwrap();
    let co_sited = write_scenario(&dir, "co-sited.json", TWO_CELLS);
    let run = aerocov(&["validate", &co_sited]);
    assert_eq!(code(&run), 3);
    let v = stdout_json(&run);
    let pair = &v["groups"][0]["pairs"][0];
    assert_eq!(pair["valid"], false);
    assert!(pair["violations"]
        .as_array()
        .unwrap()
        .iter()
        .any(|x| x["violation"] == "same-site"));

    let empty = write_scenario(
        &dir,
        "empty.json",
        r#"{"network": {"cells": [{"id": 1, "site_id": 0, "position_m": [0, 0, 75], "boresight_azimuth_deg": 0}]}}"#,
    );
    let run = aerocov(&["validate", &empty]);
    assert_eq!(code(&run), 0);
    assert!(String::from_utf8_lossy(&run.stderr).contains("no aerial-coverage groups"));
}

#[test]
fn seed_flag_is_accepted() {
    let path = scenario("standard.json");
    assert_eq!(code(&aerocov(&["--seed", "7", "validate", path.to_str().unwrap()])), 0);
}
