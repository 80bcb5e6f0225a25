use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mlmc-eig"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn error_report(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("error report is JSON")
}

#[test]
fn rates_writes_level_table_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(&["rates", "--preset", "case1", "--levels", "2", "--samples", "8"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let csv = read(dir.path(), "levels.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("level,h,t,N,mean_diff,var_diff,mean_val,var_val,cost_ms,iters"));
    assert_eq!(lines.count(), 3);
    let manifest: serde_json::Value = serde_json::from_str(&read(dir.path(), "manifest.json")).unwrap();
    assert_eq!(manifest["config"]["preset"], "case1");
    let artifacts: Vec<&str> = manifest["artifacts"].as_array().unwrap().iter().map(|a| a.as_str().unwrap()).collect();
    assert_eq!(artifacts, ["levels.csv", "summary.json"]);
}

#[test]
fn outputs_do_not_depend_on_worker_count() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["mlmc", "--preset", "case1", "--eps", "0.5", "--levels", "1", "--seed", "3"];
    let one = cli(&[&args[..], &["--workers", "1"]].concat(), a.path());
    let four = cli(&[&args[..], &["--workers", "4"]].concat(), b.path());
    assert!(one.status.success() && four.status.success());
    for f in ["levels.csv", "complexity.csv"] {
        assert_eq!(read(a.path(), f), read(b.path(), f), "{f}");
    }
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"preset": "case1", "samples": 4, "levels": 1, "seed": 9}"#).unwrap();
    let out = cli(&["rates", "--config", cfg.to_str().unwrap(), "--samples", "6"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let m: serde_json::Value = serde_json::from_str(&read(dir.path(), "manifest.json")).unwrap();
    assert_eq!(m["config"]["samples"], 6);
    assert_eq!(m["config"]["seed"], 9);
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"preset": "case1", "sampels": 4}"#).unwrap();
    let out = cli(&["rates", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let v = error_report(&out);
    assert_eq!(v["status"], "error");
    assert!(v["message"].as_str().unwrap().contains("sampels"));
}

#[test]
fn presets_fix_field_settings() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(&["mc", "--preset", "case1", "--velocity", "1,2"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(error_report(&out)["message"].as_str().unwrap().contains("custom"));
}

#[test]
fn galerkin_on_fast_convection_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(&["mlmc", "--preset", "case2", "--disc", "galerkin", "--eps", "0.1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_report(&out)["kind"], "config");
}

#[test]
fn estimators_require_a_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(&["mlqmc", "--preset", "case1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn runtime_failures_leave_an_error_report() {
    let dir = tempfile::tempdir().unwrap();
    let lattice = dir.path().join("z.txt");
    std::fs::write(&lattice, "1\n").unwrap();
    let out = cli(&["mlqmc", "--preset", "case1", "--eps", "0.5", "--lattice-file", lattice.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stdout));
    let v: serde_json::Value = serde_json::from_str(&read(dir.path(), "error.json")).unwrap();
    assert_eq!(v, error_report(&out));
}

#[test]
fn spectrum_of_a_custom_field() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(&["spectrum", "--preset", "custom", "--velocity", "0,0", "--h", "2^-3", "-k", "4"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let rows: Vec<(f64, f64)> = read(dir.path(), "spectrum.csv")
        .lines()
        .skip(1)
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.1 == 0.0));
    assert!(rows.windows(2).all(|w| w[0].0 <= w[1].0));
    assert!((rows[0].0 - 2.0 * std::f64::consts::PI.powi(2)).abs() < 2.0);
}
