use std::path::Path;
use std::process::{Command, Output};

fn gwq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gwq")).args(args).output().expect("gwq runs")
}

fn write_config(dir: &Path, json: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, json).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL: &str = r#"{"example": "transf-circle-rotation", "observables": ["gauss-a", "gauss-b"],
    "ladder": [0.4, 0.2, 0.1], "seed": 5}"#;

#[test]
fn list_examples_names_every_example() {
    let out = gwq(&["list-examples"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["pair-flat-line", "pair-circle-metric", "transf-line-translation", "transf-circle-rotation", "group-u1", "group-affine"] {
        assert!(text.contains(name), "missing {name}");
    }
}

#[test]
fn run_writes_records_manifest_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let status = gwq(&["run", "--config", &config, "--out", out.to_str().unwrap()]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));

    let text = std::fs::read_to_string(out.join("records.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "example,f_id,g_id,sign,hbar,dirac_defect,vn_defect,sa_defect,reduced_norm,classical_norm,trunc_mass,wall_ms"
    );
    // three rungs and a fit row for the single pair
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[3].contains(",fit,"));

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 5);
    assert_eq!(manifest["config"]["example"], "transf-circle-rotation");
    assert!(manifest["version"].is_string());

    let plots = dir.path().join("plots");
    let status = gwq(&["plot", "--records", out.join("records.csv").to_str().unwrap(), "--out", plots.to_str().unwrap()]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let svgs = std::fs::read_dir(&plots).unwrap().filter(|e| {
        e.as_ref().unwrap().path().extension().is_some_and(|x| x == "svg")
    });
    assert!(svgs.count() >= 1);
}

#[test]
fn crosscheck_prints_matching_norms() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{"example": "pair-flat-line", "observables": ["gauss-a"], "ladder": [0.4, 0.2], "seed": 1}"#,
    );
    let out = gwq(&["crosscheck", "--config", &config]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    for row in rows {
        let rel: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
        assert!(rel < 1e-6, "{row}");
    }
}

#[test]
fn unknown_config_keys_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#"{"example": "group-u1", "observables": ["gauss-a"], "ladder": [0.1], "seed": 1, "hbar": 2}"#);
    let out = gwq(&["run", "--config", &config, "--out", dir.path().join("o").to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("hbar"));
}
