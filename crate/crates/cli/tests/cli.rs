//! End-to-end tests of the compiled binary: exit codes, artifact layout,
//! and byte-level reproducibility of repeated runs.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn leafwave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_leafwave"))
        .args(args)
        .output()
        .expect("binary should launch")
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    fs::read(dir.join(name)).unwrap_or_else(|e| panic!("reading {name}: {e}"))
}

#[test]
fn torus_run_passes_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let out_a = tmp.path().join("a");
    let out_b = tmp.path().join("b");
    let args = |out: &Path| {
        vec![
            "run".to_string(),
            "--model".into(),
            "torus".into(),
            "--k-max".into(),
            "250".into(),
            "--t-min".into(),
            "1.0".into(),
            "--out".into(),
            out.display().to_string(),
        ]
    };
    let run_a = Command::new(env!("CARGO_BIN_EXE_leafwave"))
        .args(args(&out_a))
        .output()
        .unwrap();
    assert!(
        run_a.status.success(),
        "first run failed: {}",
        String::from_utf8_lossy(&run_a.stderr)
    );
    let stdout = String::from_utf8_lossy(&run_a.stdout);
    assert!(stdout.contains("overall: PASS"), "stdout: {stdout}");

    let manifest: serde_json::Value =
        serde_json::from_slice(&read(&out_a, "manifest.json")).unwrap();
    assert!(manifest["failed_stage"].is_null());
    let stages: Vec<&str> = manifest["stages"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["name"].as_str().unwrap())
        .collect();
    assert_eq!(stages, ["spectrum", "sojourn", "trace", "detect", "verify", "summary"]);

    let run_b = Command::new(env!("CARGO_BIN_EXE_leafwave"))
        .args(args(&out_b))
        .output()
        .unwrap();
    assert!(run_b.status.success());
    for name in [
        "spectrum.csv",
        "spectrum_numeric.csv",
        "sojourn.csv",
        "sojourn.json",
        "singularities.json",
        "trace_50.csv",
        "trace_100.csv",
        "trace_200.csv",
        "verdict.json",
        "manifest.json",
        "summary.txt",
    ] {
        assert_eq!(read(&out_a, name), read(&out_b, name), "{name} differs between runs");
    }
}

#[test]
fn bad_configuration_exits_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out").display().to_string();

    let bad_model = leafwave(&["run", "--model", "banana", "--out", &out]);
    assert_eq!(bad_model.status.code(), Some(2));

    let cfg = tmp.path().join("bad.json");
    fs::write(&cfg, r#"{"modell": "sphere"}"#).unwrap();
    let bad_key = leafwave(&["spectrum", "--config", cfg.to_str().unwrap(), "--out", &out]);
    assert_eq!(bad_key.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&bad_key.stderr);
    assert!(stderr.contains("configuration error"), "stderr: {stderr}");

    let short_ladder = leafwave(&[
        "verify",
        "--model",
        "sphere",
        "--lambda-ladder",
        "50,100",
        "--out",
        &out,
    ]);
    assert_eq!(short_ladder.status.code(), Some(2));

    // a spectrum too shallow for the requested cutoffs is a setup error,
    // and the manifest names the stage that refused to run
    let shallow = leafwave(&["trace", "--model", "sphere", "--k-max", "40", "--out", &out]);
    assert_eq!(shallow.status.code(), Some(2));
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(Path::new(&out).join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["failed_stage"], "trace");
}

#[test]
fn spectrum_subcommand_writes_csv_with_header() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let result = leafwave(&[
        "spectrum",
        "--model",
        "sphere",
        "--grid",
        "128",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(0));
    let csv = String::from_utf8(read(&out, "spectrum.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "index,label,lambda,sqrt_lambda,multiplicity,convention,provenance"
    );
    let first = lines.next().unwrap();
    assert!(first.starts_with("0,"), "first data row: {first}");
    assert!(csv.contains(",analytic"));
}

#[test]
fn starved_catalog_fails_verification_with_code_one() {
    // with almost no seeds the return-time search finds only the shortest
    // arc, so the detected flat times have nothing to match against
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{
  "model": "product",
  "seed_budget": 2,
  "k_max": 200,
  "t_min": 0.5,
  "t_max": 6.5
}"#,
    )
    .unwrap();
    let out = tmp.path().join("out");
    let result = leafwave(&[
        "verify",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("verification failed"), "stderr: {stderr}");
    let verdict: serde_json::Value = serde_json::from_slice(&read(&out, "verdict.json")).unwrap();
    assert_eq!(verdict["pass"], false);
    assert!(!verdict["unmatched"].as_array().unwrap().is_empty());
}

#[test]
fn chi_cutoff_run_verifies_flat_times() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{
  "model": "product",
  "k_max": 200,
  "t_min": 0.5,
  "t_max": 6.5,
  "chi_keeps": [[0.5, 6.15]],
  "chi_ramp": 0.1
}"#,
    )
    .unwrap();
    let out = tmp.path().join("out");
    let result = leafwave(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        result.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&result.stderr)
    );
    let report: serde_json::Value =
        serde_json::from_slice(&read(&out, "singularities.json")).unwrap();
    let times: Vec<f64> = report["detections"]
        .as_array()
        .unwrap()
        .iter()
        .map(|d| d["time"].as_f64().unwrap())
        .collect();
    assert_eq!(times.len(), 6, "detections: {times:?}");
    for (i, t) in times.iter().enumerate() {
        let target = (i + 1) as f64;
        assert!((t - target).abs() < 0.05, "detection {t} vs flat time {target}");
    }
}
