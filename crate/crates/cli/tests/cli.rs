use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn screencost(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_screencost"))
        .args(args)
        .current_dir(dir)
        .env_remove("SCREENCOST_OUT")
        .output()
        .expect("binary runs")
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

/// A one-cell grid keeps simulation tests quick.
const SMALL: &str = r#"{
  "grid": {
    "traffic_growth": [{"value": 0.0, "probability": 1.0}],
    "clandestine_growth": [{"value": 0.0, "probability": 1.0}]
  },
  "simulation": {"horizon_hours": 200.0}
}"#;

#[test]
fn sa_writes_cost_grid_and_manifest() {
    let tmp = TempDir::new().unwrap();
    let out = screencost(&["sa", "--out", "o"], tmp.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("£60,416,667"), "{stdout}");
    assert!(stdout.contains("cheapest SG 10%"), "{stdout}");

    let dir = tmp.path().join("o");
    let csv = fs::read_to_string(dir.join("scenario_cost_cg0.csv")).unwrap();
    assert_eq!(
        csv,
        "TG,SG 0%,SG 10%,SG 20%\n\
         0%,60000000,59545455,60000000\n\
         10%,66000000,65000000,65000000\n\
         20%,72000000,70454545,70000000\n"
    );
    let m = manifest(&dir);
    assert_eq!(m["command"], "sa");
    assert_eq!(m["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
    let files: Vec<&str> = m["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f.as_str().unwrap())
        .collect();
    assert!(files.contains(&"scenario_cost_cg0.csv"));
    assert!(files.contains(&"config.json"));
}

#[test]
fn markdown_format_renders_pounds() {
    let tmp = TempDir::new().unwrap();
    let out = screencost(&["sa", "--out", "o", "--format", "md"], tmp.path());
    assert!(out.status.success());
    let md = fs::read_to_string(tmp.path().join("o/scenario_cost_cg0.md")).unwrap();
    assert!(md.contains("£70,454,545"), "{md}");
}

#[test]
fn env_var_sets_default_output_dir() {
    let tmp = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_screencost"))
        .arg("dtree")
        .current_dir(tmp.path())
        .env("SCREENCOST_OUT", "from-env")
        .output()
        .unwrap();
    assert!(out.status.success());
    let dir = tmp.path().join("from-env");
    assert!(dir.join("manifest.json").exists());
    assert!(dir.join("tree.dot").exists());
    assert!(dir.join("tree_counts.csv").exists());
}

#[test]
fn out_flag_beats_env_var() {
    let tmp = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_screencost"))
        .args(["sa", "--out", "flag"])
        .current_dir(tmp.path())
        .env("SCREENCOST_OUT", "from-env")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(tmp.path().join("flag/manifest.json").exists());
    assert!(!tmp.path().join("from-env").exists());
}

#[test]
fn config_errors_exit_two() {
    let tmp = TempDir::new().unwrap();
    fs::write(
        tmp.path().join("bad.json"),
        r#"{"baseline": {"colour": 1}}"#,
    )
    .unwrap();
    let out = screencost(&["validate-config", "--config", "bad.json"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("baseline.colour"));

    fs::write(
        tmp.path().join("sum.json"),
        r#"{"grid": {"traffic_growth": [
            {"value": 0.0, "probability": 0.5},
            {"value": 0.1, "probability": 0.5},
            {"value": 0.2, "probability": 0.5}]}}"#,
    )
    .unwrap();
    let out = screencost(&["sa", "--config", "sum.json"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("probabilities sum to 1.5"));

    let out = screencost(&["sa", "--config", "missing.json"], tmp.path());
    assert_eq!(out.status.code(), Some(2));

    let out = screencost(&["sim", "--mode", "des9"], tmp.path());
    assert_eq!(out.status.code(), Some(2));

    let out = screencost(&["sim", "--mode", "mc", "--reps", "0"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validate_config_accepts_defaults() {
    let tmp = TempDir::new().unwrap();
    let out = screencost(&["validate-config"], tmp.path());
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("config ok"));
    assert!(!tmp.path().join("screencost-out").exists());
}

#[test]
fn unwritable_output_is_a_runtime_fault() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("taken"), "a file, not a directory").unwrap();
    let out = screencost(&["sa", "--out", "taken"], tmp.path());
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn sim_records_seeds_and_reruns_exactly() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("small.json"), SMALL).unwrap();
    let args = |out: &'static str| {
        [
            "sim",
            "--mode",
            "des3",
            "--config",
            "small.json",
            "--reps",
            "3",
            "--seed",
            "9",
            "--out",
            out,
        ]
    };
    assert!(screencost(&args("a"), tmp.path()).status.success());
    assert!(screencost(&args("b"), tmp.path()).status.success());

    let a = fs::read(tmp.path().join("a/replications_des3.csv")).unwrap();
    let b = fs::read(tmp.path().join("b/replications_des3.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 1 + 3 * 3);

    let m = manifest(&tmp.path().join("a"));
    assert_eq!(m["root_seed"], 9);
    assert_eq!(m["replications"], 3);
    assert_eq!(m["seeds"]["DES3"].as_array().unwrap().len(), 9);
    assert_eq!(m, manifest(&tmp.path().join("b")));
}

#[test]
fn compare_lists_every_requested_method() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("small.json"), SMALL).unwrap();
    let out = screencost(
        &[
            "compare",
            "--methods",
            "sa,dt,des0",
            "--config",
            "small.json",
            "--reps",
            "2",
            "--out",
            "o",
        ],
        tmp.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(tmp.path().join("o/comparison.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "Method,SG 0%,SG 10%,SG 20%,Cheapest");
    assert!(rows[1].starts_with("SA,60000000,"), "{csv}");
    assert!(rows[2].starts_with("DT,"));
    assert!(rows[3].starts_with("DES 0,"));
    assert!(tmp.path().join("o/relative_comparison.csv").exists());
    assert!(tmp.path().join("o/replications_des0.csv").exists());
}
