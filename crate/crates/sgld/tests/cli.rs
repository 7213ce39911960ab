use std::fs;
use std::path::Path;
use std::process::Command;

use sgld::commands::{run, RunOptions};
use sgld::config::{ExperimentConfig, ExperimentKind};
use sgld::output::VERDICT_COLUMNS;
use sha2::{Digest, Sha256};

fn sha256(path: &Path) -> String {
    hex::encode(Sha256::digest(fs::read(path).unwrap()))
}

fn config(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(text).unwrap()
}

fn run_in(kind: ExperimentKind, cfg: &ExperimentConfig, dir: &Path, seed: Option<u64>) -> sgld::commands::Outcome {
    run(
        kind,
        cfg,
        &RunOptions {
            seed,
            out: Some(dir.to_path_buf()),
            threads: None,
        },
    )
    .unwrap()
}

const GAUSSIAN_CONSTANTS: &str = r#"{"experiment": "constants", "target": {"name": "gaussian", "dim": 1, "beta": 2.0}}"#;

const SMALL_SIMULATE: &str = r#"{
    "target": {"name": "bump", "dim": 2, "beta": 2.0},
    "schedule": {"constant": 0.01},
    "ensemble": {"n_chains": 200, "n_blocks": 10},
    "horizon": 400,
    "record_every": 20
}"#;

#[test]
fn constants_verdicts_match_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(ExperimentKind::Constants, &config(GAUSSIAN_CONSTANTS), dir.path(), None);
    assert!(out.passed());
    let written = fs::read_to_string(dir.path().join("verdicts.csv")).unwrap();
    let golden = include_str!("golden/constants_gaussian_verdicts.csv");
    assert_eq!(written, golden);
    assert_eq!(golden.lines().next().unwrap(), VERDICT_COLUMNS.join(","));
}

#[test]
fn every_verdict_file_has_the_declared_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(SMALL_SIMULATE);
    run_in(ExperimentKind::Simulate, &cfg, dir.path(), Some(1));
    let mut r = csv::Reader::from_path(dir.path().join("verdicts.csv")).unwrap();
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, VERDICT_COLUMNS);
    for row in r.records() {
        let row = row.unwrap();
        assert_eq!(row.len(), VERDICT_COLUMNS.len());
        assert!(row[1].parse::<f64>().is_ok());
        assert!(row[2].parse::<f64>().is_ok());
        assert!(row[3].is_empty() || row[3].parse::<f64>().is_ok());
        assert!(&row[4] == "pass" || &row[4] == "fail");
    }
}

#[test]
fn constants_report_for_gaussian() {
    let dir = tempfile::tempdir().unwrap();
    run_in(ExperimentKind::Constants, &config(GAUSSIAN_CONSTANTS), dir.path(), None);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("rate_report.json")).unwrap()).unwrap();
    let r = &v["report"];
    assert_eq!(r["geometry"]["r"], 2.0);
    assert_eq!(r["geometry"]["kappa"], 0.5);
    assert_eq!(r["distance"]["c_f"], 4.0);
    assert!((r["distance"]["r1"].as_f64().unwrap() - 3.02).abs() < 1e-12);
    assert!(r["budget"]["binding"].is_string());
}

#[test]
fn bump_report_names_binding_restriction() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(r#"{"target": {"name": "bump", "dim": 2, "beta": 2.0}}"#);
    let out = run_in(ExperimentKind::Constants, &cfg, dir.path(), None);
    assert!(out.summary.contains("binding:"));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("rate_report.json")).unwrap()).unwrap();
    assert!(v["report"]["budget"]["binding"].is_string());
    assert_eq!(v["restriction_bounds"].as_array().unwrap().len(), 10);
}

#[test]
fn simulate_is_reproducible_and_seed_sensitive() {
    let cfg = config(SMALL_SIMULATE);
    let digests = |seed| {
        let dir = tempfile::tempdir().unwrap();
        run_in(ExperimentKind::Simulate, &cfg, dir.path(), Some(seed));
        (sha256(&dir.path().join("moments.csv")), sha256(&dir.path().join("verdicts.csv")))
    };
    let a = digests(42);
    assert_eq!(a, digests(42));
    assert_ne!(a.0, digests(43).0);
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let cfg = config(
        r#"{
        "target": {"name": "bump", "dim": 2, "beta": 2.0},
        "ensemble": {"n_pairs": 300, "n_blocks": 20},
        "horizon": 200,
        "record_every": 10,
        "init": {"x": {"gaussian": {"mean": [1.0, 0.0], "std": 1.0}}, "y": {"gaussian": {"mean": [1.0, 0.0], "std": 1.0}}}
    }"#,
    );
    let digest_with = |threads| {
        let dir = tempfile::tempdir().unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| run_in(ExperimentKind::Couple, &cfg, dir.path(), Some(5)));
        (
            sha256(&dir.path().join("coupling_series.csv")),
            sha256(&dir.path().join("merge_times.csv")),
        )
    };
    let one = digest_with(1);
    assert_eq!(one, digest_with(3));
    assert_eq!(one, digest_with(8));
}

#[test]
fn metadata_echoes_defaults_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    run_in(ExperimentKind::Constants, &config(GAUSSIAN_CONSTANTS), dir.path(), Some(99));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("metadata.json")).unwrap()).unwrap();
    assert_eq!(v["command"], "constants");
    assert_eq!(v["seed"], 99);
    assert_eq!(v["config"]["seed"], 99);
    assert_eq!(v["config"]["coupling"]["substeps"], 4);
    assert_eq!(v["config"]["ensemble"]["n_blocks"], 20);
    let outputs: Vec<&str> = v["outputs"].as_array().unwrap().iter().map(|s| s.as_str().unwrap()).collect();
    for name in ["rate_report.json", "restrictions.csv", "verdicts.csv", "metadata.json"] {
        assert!(outputs.contains(&name), "{name}");
    }
    // The echoed config loads back unchanged.
    let echoed = serde_json::to_string(&v["config"]).unwrap();
    let back = ExperimentConfig::from_json(&echoed).unwrap();
    assert_eq!(back.seed, 99);
}

#[test]
fn config_errors_name_the_field() {
    let err = ExperimentConfig::from_json(r#"{"target": {"name": "gaussian", "dim": 1}}"#).unwrap_err();
    assert!(err.is_config());
    assert!(err.to_string().contains("`beta`"), "{err}");
    let err = ExperimentConfig::from_json(r#"{"target": {"name": "gaussian", "dim": 1, "beta": 1},
        "ensemble": {"n_chain": 3}}"#)
    .unwrap_err();
    assert!(err.to_string().contains("n_chain") && err.to_string().contains("line 2"), "{err}");
    let err = ExperimentConfig::from_json(r#"{"target": {"name": "banana", "dim": 1, "beta": 1}}"#).unwrap_err();
    assert!(err.to_string().contains("banana"), "{err}");
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_sgld");
    let dir = tempfile::tempdir().unwrap();

    let good = write(dir.path(), "good.json", GAUSSIAN_CONSTANTS);
    let out = Command::new(bin)
        .args(["constants", "--config"])
        .arg(&good)
        .arg("--out")
        .arg(dir.path().join("c"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("R = 2.0000000000"));

    let bad = write(dir.path(), "bad.json", r#"{"target": {"name": "bump", "dim": 2}}"#);
    let out = Command::new(bin).args(["constants", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("beta"));

    let missing = Command::new(bin)
        .args(["verify", "--config"])
        .arg(dir.path().join("nope.json"))
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));

    // A step size far beyond the stability limit makes every chain diverge.
    let diverging = write(
        dir.path(),
        "div.json",
        r#"{"target": {"name": "quadratic", "dim": 1, "beta": 1.0, "stiffness": 1.2},
            "schedule": {"constant": 5.6}, "ensemble": {"n_chains": 50, "n_blocks": 5},
            "horizon": 200, "record_every": 10}"#,
    );
    let out = Command::new(bin)
        .args(["simulate", "--threads", "2", "--config"])
        .arg(&diverging)
        .arg("--out")
        .arg(dir.path().join("d"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stdout).contains("[FAIL] divergence_fraction"));
}
