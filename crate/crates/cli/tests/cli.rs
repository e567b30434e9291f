use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn nodal(dir: &Path, args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_nodal"))
        .arg("--out")
        .arg(dir.join("out"))
        .args(args)
        .status()
        .expect("run nodal")
        .code()
        .unwrap_or(-1)
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.json");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn read_json(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("out").join(name)).unwrap()).unwrap()
}

#[test]
fn missing_config_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(nodal(dir.path(), &["--config", "/nonexistent/run.json", "solve"]), 1);
}

#[test]
fn positive_profiles_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"signs": "positive"}"#);
    assert_eq!(nodal(dir.path(), &["--config", &cfg, "solve"]), 0);
    let sol = read_json(dir.path(), "solutions.json");
    let profiles: Vec<&Value> = sol["classes"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|c| c["profiles"].as_array().unwrap())
        .collect();
    assert_eq!(profiles.len(), 8);
    for p in &profiles {
        assert_eq!(p["sign"], 1);
        let csv = dir.path().join("out").join(p["csv_path"].as_str().unwrap());
        let text = std::fs::read_to_string(csv).unwrap();
        assert!(text.starts_with("r,u,v,theta\n"));
    }
    let svg = dir.path().join("out/plots/j1.svg");
    let before = std::fs::read(&svg).unwrap();
    std::fs::remove_file(&svg).unwrap();
    assert_eq!(nodal(dir.path(), &["plot"]), 0);
    let after = std::fs::read(&svg).unwrap();
    assert!(String::from_utf8(after).unwrap().contains("<polyline"));
    assert!(!before.is_empty());
}

#[test]
fn unreachable_targets_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"problem": {"dimension": 2, "geometry": {"ball": {"R": 10.0}}, "lambda": 0.01,
            "bc": "dirichlet", "q": "1", "g": "u^3", "delta": 1.0}, "targets": [0, 1, 2, 3]}"#,
    );
    assert_eq!(nodal(dir.path(), &["--config", &cfg, "solve"]), 3);
    let sol = read_json(dir.path(), "solutions.json");
    assert!(!sol["missing"].as_array().unwrap().is_empty());
}

#[test]
fn sweep_single_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"sweep": {"lambdas": [5.0], "k_max": 3}}"#);
    assert_eq!(nodal(dir.path(), &["--config", &cfg, "sweep"]), 0);
    let rep = read_json(dir.path(), "sweep.json");
    assert!(rep["entries"][0]["nodal_count"].as_u64().unwrap() >= 12);
    assert_eq!(rep["lambda_star"][2]["lambda"], 5.0);
    let csv = std::fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap();
    assert!(csv.starts_with("lambda,sign,branch,j,count\n"));
}

#[test]
fn periodic_without_twist_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"periodic": {"lambdas": [0.01], "radii": 30}}"#);
    assert_eq!(nodal(dir.path(), &["--config", &cfg, "periodic"]), 3);
    let rep = read_json(dir.path(), "periodic.json");
    assert!(rep["error"].as_str().unwrap().contains("twist"));
}

#[test]
fn periodic_with_twist() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(nodal(dir.path(), &["periodic"]), 0);
    let rep = read_json(dir.path(), "periodic.json");
    let pts = rep["fixed_points"].as_array().unwrap();
    assert!(pts.len() >= 2);
    for p in pts {
        assert!(p["residual"].as_f64().unwrap() < 1e-8);
        assert!(dir.path().join("out").join(p["csv_path"].as_str().unwrap()).exists());
    }
}

#[test]
fn validate_subset() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"validate": {"checks": ["energy", "neumann"]}}"#);
    assert_eq!(nodal(dir.path(), &["--config", &cfg, "validate"]), 0);
    let rep = read_json(dir.path(), "validate.json");
    assert_eq!(rep["checks"].as_array().unwrap().len(), 2);
    assert!(dir.path().join("out/run_meta.json").exists());
}

#[test]
fn unknown_check_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"validate": {"checks": ["nope"]}}"#);
    assert_eq!(nodal(dir.path(), &["--config", &cfg, "validate"]), 1);
}
