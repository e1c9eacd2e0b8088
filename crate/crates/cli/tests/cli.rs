use std::path::Path;
use std::process::{Command, Output};

use hasimoto_lab::{ExperimentKind, Manifest, RunStatus};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_hasimoto-lab"));
    c.env_remove("HASIMOTO_LAB_OUT");
    c
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

fn manifest(dir: &Path) -> Manifest {
    let text = std::fs::read_to_string(dir.join("manifest.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn catalog_lists_every_kind_and_validator() {
    let a = bin().arg("list-experiments").output().unwrap();
    let b = bin().arg("list-experiments").output().unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    for k in ExperimentKind::ALL {
        assert!(text.contains(k.name()), "{} missing", k.name());
        assert!(text.contains(k.validator()), "{} validator missing", k.name());
    }
}

#[test]
fn crosscheck_smoke_run() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("cc");
    let out = run(&["crosscheck", "--set", "refinements=64,128", "--set", "t_end=0.02"], &dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("series_discrepancy.csv")).unwrap();
    assert!(csv.starts_with("t,max_discrepancy"));
    assert!(csv.lines().count() > 2);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["levels"].as_array().unwrap().len(), 2);
    // discrepancy starts from zero
    let first = csv.lines().nth(1).unwrap();
    let d: f64 = first.split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(d, 0.0);

    let m = manifest(&dir);
    assert_eq!(m.status, RunStatus::Complete);
    assert_eq!(m.experiment, "crosscheck");
    assert!(m.wall_seconds.is_some());
    for f in &m.outputs {
        assert!(dir.join(f).exists(), "{f}");
    }
    assert!(m.outputs.iter().any(|f| f == "series_levels.csv"));
}

#[test]
fn missing_experiment_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("none");
    let out = bin().arg("--out").arg(&dir).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("experiment"));
    assert!(!dir.exists());
}

#[test]
fn every_violation_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("bad");
    let out = run(&["llg", "--set", "alpha=-2", "--set", "n=3", "--set", "colour=blue"], &dir);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    for needle in ["alpha", "colour", "n"] {
        assert!(err.contains(needle), "{needle} not in {err}");
    }
    assert!(!dir.exists());
}

#[test]
fn manifest_config_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("first");
    let out = run(&["covariance", "--seed", "3", "--set", "paths=8", "--set", "t_end=0.01"], &first);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(&first);
    assert_eq!(m.seed, 3);

    let cfg_file = tmp.path().join("replay.cfg");
    std::fs::write(&cfg_file, &m.config_text).unwrap();
    let second = tmp.path().join("second");
    let out = bin()
        .arg("--config")
        .arg(&cfg_file)
        .arg("--out")
        .arg(&second)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let a = std::fs::read(first.join("series_covariance.csv")).unwrap();
    let b = std::fs::read(second.join("series_covariance.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(manifest(&second).config, m.config);
}

#[test]
fn seed_changes_stochastic_output() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["sllg", "--set", "paths=4", "--set", "levels=1", "--set", "t_end=0.01"];
    let mut a_args = args.to_vec();
    a_args.extend(["--seed", "1"]);
    let mut b_args = args.to_vec();
    b_args.extend(["--seed", "2"]);
    assert!(run(&a_args, &tmp.path().join("a")).status.success());
    assert!(run(&b_args, &tmp.path().join("b")).status.success());
    let a = std::fs::read(tmp.path().join("a/series_path.csv")).unwrap();
    let b = std::fs::read(tmp.path().join("b/series_path.csv")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn default_output_root_comes_from_env() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .env("HASIMOTO_LAB_OUT", tmp.path())
        .args(["identities", "--seed", "12", "--set", "refinements=33,65"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("identities-12");
    assert!(dir.join("series_identities.csv").exists());
    assert_eq!(manifest(&dir).status, RunStatus::Complete);
}
