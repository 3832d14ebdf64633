//! Black-box tests of the binary: exit codes, artifacts, determinism.

use std::fs;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_phaselab"))
}

#[test]
fn list_catalog_prints_registered_entries() {
    let out = bin().arg("list-catalog").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["identity", "free_particle", "sin_perturbed", "gaussian", "shubin_decay"] {
        assert!(text.contains(name), "missing {name} in listing:\n{text}");
    }
}

#[test]
fn malformed_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, "{ not json").unwrap();
    let out = bin().args(["kernel", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8(out.stderr).unwrap().is_empty());
}

#[test]
fn unknown_catalog_entry_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"phase": "no_such_phase"}"#).unwrap();
    let out = bin()
        .args(["kernel", "--kernel-M", "16", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn kernel_run_writes_deterministic_summary_and_tensor() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let run = || {
        let out = bin()
            .args(["kernel", "--route", "schwartz", "--kernel-M", "16", "--L", "4"])
            .arg("--out")
            .arg(&out_dir)
            .output()
            .unwrap();
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
        (
            fs::read(out_dir.join("summary.json")).unwrap(),
            fs::read(out_dir.join("kernel.tensor")).unwrap(),
        )
    };
    let (s1, t1) = run();
    let (s2, t2) = run();
    assert_eq!(s1, s2, "summary.json not byte-identical across runs");
    assert_eq!(t1, t2, "kernel.tensor not byte-identical across runs");
    let summary: serde_json::Value = serde_json::from_slice(&s1).unwrap();
    assert_eq!(summary["passed"], serde_json::Value::Bool(true));
}

#[test]
fn certify_map_reports_residual() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["certify", "--map", "free_particle:0.5"])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("certify.json")).unwrap()).unwrap();
    assert!(report["symplectic_residual"].as_f64().unwrap() <= 1e-6);
}
