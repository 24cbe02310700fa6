use std::path::Path;
use std::process::{Command, Output};

use hyperspherical::cli::uniformity_report;
use hyperspherical::sphere::sample_uniform;
use serde_json::Value;

fn bin(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hyperspherical"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn json(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).expect("valid JSON")
}

#[test]
fn sample_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.csv", "b.csv"] {
        let out = bin(&["sample", "-n", "100", "-d", "3", "--seed", "7", "--output", name], dir.path());
        assert_eq!(out.status.code(), Some(0));
    }
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.csv")).unwrap());
    assert_eq!(String::from_utf8_lossy(&a).lines().count(), 101);
}

#[test]
fn sample_then_test_matches_in_memory() {
    let dir = tempfile::tempdir().unwrap();
    for (d, file) in [(2, "c.csv"), (4, "s.json")] {
        let out = bin(&["sample", "-n", "25", "-d", &d.to_string(), "--seed", "3", "-o", file], dir.path());
        assert_eq!(out.status.code(), Some(0));
        let out = bin(&["test", "--input", file], dir.path());
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let from_file = json(&out.stdout);
        let in_memory = uniformity_report(&sample_uniform(25, d, 3).unwrap(), 41).unwrap();
        for key in ["ajne", "rayleigh", "range"] {
            if let Some(v) = in_memory.get(key) {
                let w = from_file[key].as_f64().unwrap();
                assert!((v.as_f64().unwrap() - w).abs() < 1e-12, "{key}");
            }
        }
        if let Some(s) = in_memory.get("sobolev") {
            let diff = s["value"].as_f64().unwrap() - from_file["sobolev"]["value"].as_f64().unwrap();
            assert!(diff.abs() < 1e-12);
        }
        assert_eq!(from_file["schema"], "v1");
    }
}

#[test]
fn optimize_writes_outputs_with_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{
        "objective": {"objective": "mhe", "kernel": {"family": "riesz", "s": 1, "metric": "chordal"}, "augment": false},
        "optimizer": {"max_iters": 300, "seed": 4},
        "n": 4, "d": 3, "restarts": 4,
        "outputs": {"trajectory_csv": "out/t.csv", "final_json": "out/final.json", "report_json": "out/report.json"}
    }"#;
    std::fs::create_dir(dir.path().join("out")).unwrap();
    std::fs::write(dir.path().join("exp.json"), config).unwrap();
    let out = bin(&["optimize", "--config", "exp.json"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&std::fs::read(dir.path().join("out/report.json")).unwrap());
    assert_eq!(report["schema"], "v1");
    assert_eq!(report["provenance"]["seed"], 4);
    assert_eq!(report["provenance"]["config"]["optimizer"]["momentum"], 0.9);
    assert!(report["provenance"]["version"].is_string());
    assert_eq!(report["restarts"].as_array().unwrap().len(), 4);
    assert!(report["diagnostics"]["sigma_max"].is_number());
    let csv = std::fs::read_to_string(dir.path().join("out/t.csv")).unwrap();
    assert!(csv.starts_with("iter,objective,energy_s2,separation_geodesic,masscenter_norm"));
    let fin = json(&std::fs::read(dir.path().join("out/final.json")).unwrap());
    assert_eq!(fin["n"], 4);
}

#[test]
fn rmhp_with_augment_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{
        "objective": {"objective": "rmhp", "augment": true},
        "n": 5, "d": 3,
        "outputs": {"trajectory_csv": "t.csv", "final_json": "f.json", "report_json": "r.json"}
    }"#;
    std::fs::write(dir.path().join("exp.json"), config).unwrap();
    let out = bin(&["optimize", "--config", "exp.json"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.to_lowercase().contains("rmhp"), "{err}");
    assert!(!dir.path().join("r.json").exists());
}

#[test]
fn usage_errors_name_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&["sample", "-n", "x", "-d", "3"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("-n"));
    let out = bin(&["diagnose"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--input"));
    let out = bin(&["test", "--input", "missing.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn diagnose_reports_json() {
    let dir = tempfile::tempdir().unwrap();
    bin(&["sample", "-n", "12", "-d", "3", "-o", "c.csv"], dir.path());
    let out = bin(&["diagnose", "--input", "c.csv", "--samples", "2000"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out.stdout);
    assert_eq!(r["schema"], "v1");
    let cover = r["covering_estimate"].as_f64().unwrap();
    assert!((0.0..=std::f64::consts::PI).contains(&cover));
    assert!(r["sigma_max"].as_f64().unwrap() >= r["sigma_min"].as_f64().unwrap());
}

#[test]
fn oracle_check_reports_and_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&["oracle", "--check", "prop4", "--output", "p4.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let r = json(&std::fs::read(dir.path().join("p4.json")).unwrap());
    assert_eq!(r["passed"], true);
    assert_eq!(r["reports"][0]["method"], "GridSearch");
    assert!(r["reports"][0]["samples_or_restarts"].as_u64().unwrap() >= 1000);
}
