use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn gldiv(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gldiv"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("GLDIV_JOBS")
        .output()
        .unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn assert_manifest_matches(dir: &Path) {
    let manifest = read_json(&dir.join("manifest.json"));
    let artifacts = manifest["artifacts"].as_array().unwrap();
    assert!(!artifacts.is_empty());
    for a in artifacts {
        let bytes = std::fs::read(dir.join(a["path"].as_str().unwrap())).unwrap();
        assert_eq!(a["sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&bytes)));
        assert_eq!(a["bytes"].as_u64().unwrap() as usize, bytes.len());
    }
}

#[test]
fn polya_reports_interior_maximum() {
    let dir = tempfile::tempdir().unwrap();
    let out = gldiv(&["polya", "--k", "1", "--beta", "1", "--gamma", "1", "--radius", "0.4"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let report = read_json(&dir.path().join("polya.json"));
    assert_eq!(report["interior"], Value::Bool(true));
    for key in ["alpha", "argmax", "max", "boundary_max"] {
        assert!(report.get(key).is_some(), "{key}");
    }
    assert_manifest_matches(dir.path());
}

#[test]
fn sweep_writes_one_row_per_eps_with_degree_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = gldiv(&["sweep", "--eps", "0.1,0.05,0.025", "--k", "1"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "eps,sup_u,eps_lip,e_dir,e_div,e_pot,e_total,excess,combo,degree,iters");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.split(',').nth(9) == Some("1")));
    let json = read_json(&dir.path().join("sweep.json"));
    assert_eq!(json.as_array().unwrap().len(), 3);
    assert_manifest_matches(dir.path());
}

#[test]
fn mesh_info_area_is_pi() {
    let dir = tempfile::tempdir().unwrap();
    let out = gldiv(&["mesh-info", "--n-theta", "64", "--n-s", "32"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let meta = read_json(&dir.path().join("mesh.json"));
    assert!((meta["area"].as_f64().unwrap() - std::f64::consts::PI).abs() < 1e-6);
    assert_eq!(meta["n_theta"], 64);
}

#[test]
fn empty_config_is_a_schema_error_naming_domain() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("empty.json");
    std::fs::write(&config, "").unwrap();
    let out = gldiv(&["minimize", "--config", config.to_str().unwrap()], &dir.path().join("o"));
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    let record: Value = serde_json::from_str(stderr.trim()).unwrap();
    assert_eq!(record["kind"], "config");
    assert!(record["message"].as_str().unwrap().contains("domain"));
}

#[test]
fn minimal_config_fills_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.json");
    std::fs::write(&config, r#"{"domain": {"fourier": {"a0": 1.0}}, "eps": 0.1}"#).unwrap();
    let out = gldiv(&["mesh-info", "--config", config.to_str().unwrap()], &dir.path().join("o"));
    assert_eq!(out.status.code(), Some(0));
    let manifest = read_json(&dir.path().join("o/manifest.json"));
    assert_eq!(manifest["config"]["k"], 1.0);
    assert_eq!(manifest["config"]["mesh"]["n_theta"], 128);
    assert_eq!(manifest["config"]["mesh"]["n_s"], 64);
    assert_eq!(manifest["config"]["seed"], 0);
}

#[test]
fn invalid_values_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = gldiv(&["minimize", "--eps", "-0.1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = read_json(&dir.path().join("error.json"));
    assert_eq!(err["path"], "eps");

    let config = dir.path().join("bad.json");
    std::fs::write(&config, "{\"domain\": {\"fourier\": {\"a0\": 1.0}},\n \"mesh\": {\"n_theta\": 64, \"nt\": 3}}").unwrap();
    let out = gldiv(&["mesh-info", "--config", config.to_str().unwrap()], &dir.path().join("o"));
    assert_eq!(out.status.code(), Some(2));
    let record: Value = serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap();
    assert_eq!(record["path"], "mesh.nt");
    assert_eq!(record["line"], 2);

    let out = gldiv(&["sweep"], &dir.path().join("p"));
    assert_eq!(out.status.code(), Some(2));
    let out = gldiv(&["no-such-command"], &dir.path().join("q"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn jobs_env_overrides_flag() {
    let dir = tempfile::tempdir().unwrap();
    let run = |env: &str, out: &str| {
        Command::new(env!("CARGO_BIN_EXE_gldiv"))
            .args(["sweep", "--eps", "0.3,0.25", "--n-theta", "32", "--jobs", "1", "--out"])
            .arg(dir.path().join(out))
            .env("GLDIV_JOBS", env)
            .output()
            .unwrap()
    };
    let ok = run("2", "a");
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert_eq!(read_json(&dir.path().join("a/manifest.json"))["config"]["sweep"]["jobs"], 2);
    assert_eq!(run("many", "b").status.code(), Some(2));
}

#[test]
fn minimize_and_ansatz_write_their_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = gldiv(&["minimize", "--eps", "0.3", "--n-theta", "32", "--n-s", "16"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let field = std::fs::read_to_string(dir.path().join("field.csv")).unwrap();
    assert!(field.starts_with("x,y,u1,u2\n"));
    assert_eq!(field.lines().count(), 1 + 32 * 16);
    assert!(std::fs::read_to_string(dir.path().join("history.csv")).unwrap().starts_with("iter,total\n"));
    let report = read_json(&dir.path().join("report.json"));
    assert_eq!(report["converged"], true);
    assert_eq!(report["degree"], 1);
    assert_manifest_matches(dir.path());

    let dir = tempfile::tempdir().unwrap();
    let out = gldiv(&["ansatz", "--eps", "0.1", "--n-theta", "128", "--n-s", "64"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let a = read_json(&dir.path().join("ansatz.json"));
    assert!(a["relative_error"].as_f64().unwrap().abs() < 0.02);
}

#[test]
fn extend_check_writes_dump_and_audits() {
    let dir = tempfile::tempdir().unwrap();
    let out = gldiv(
        &["extend-check", "--eps", "0.3", "--n-theta", "32", "--n-s", "16", "--n1", "64", "--n2", "8", "--samples", "500"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let dump = std::fs::read_to_string(dir.path().join("extension.csv")).unwrap();
    assert!(dump.starts_with("y1,y2,x,y,U1,U2,D,detSigma\n"));
    assert_eq!(dump.lines().count(), 1 + 64 * 8);
    let audit = read_json(&dir.path().join("ellipticity.json"));
    assert_eq!(audit["samples"], 500);
    assert!(audit["min_ratio"].as_f64().unwrap() >= 1.0 - 1e-12);
    let gluing = read_json(&dir.path().join("gluing.json"));
    assert_eq!(gluing["bumps"].as_array().unwrap().len(), 32);
    assert_manifest_matches(dir.path());
}
