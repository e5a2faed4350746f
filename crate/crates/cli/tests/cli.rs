use std::fs;
use std::process::Command;

fn perichev() -> Command {
    Command::new(env!("CARGO_BIN_EXE_perichev"))
}

fn csv_files(dir: &std::path::Path) -> Vec<std::path::PathBuf> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    v.sort();
    v
}

#[test]
fn validate_writes_table_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nested/out");
    let status = perichev()
        .args(["validate", "--n", "12,16", "--quiet", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let files = csv_files(&out);
    assert_eq!(files.len(), 1);
    let name = files[0].file_name().unwrap().to_string_lossy().into_owned();
    assert!(name.starts_with("validate_") && name.ends_with(".csv"), "{name}");
    let csv = fs::read_to_string(&files[0]).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "n,error,rate");
    assert!(lines[1].starts_with("12,") && lines[1].ends_with(','));
    assert_eq!(lines.len(), 3);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["n_values"], serde_json::json!([12, 16]));
    assert_eq!(manifest["experiment"], "validate");
}

#[test]
fn config_file_and_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"experiment": "validate", "n_values": [40], "ic": "linear"}"#).unwrap();
    let out = dir.path().join("o");
    let output = perichev()
        .args(["solve", "--n", "6,8", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(
        output.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    assert!(String::from_utf8_lossy(&output.stdout).starts_with("n,method,wall_seconds\n6,spacetime,"));
    assert_eq!(csv_files(&out).len(), 2);
}

#[test]
fn empty_bench_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"experiment": "bench", "n_values": []}"#).unwrap();
    let status = perichev()
        .arg("bench")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .arg("--quiet")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = perichev()
        .args(["validate", "--config", "/no/such/config.json"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("/no/such/config.json"));

    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"experiment": "validate", "n_values": [32, 16]}"#).unwrap();
    let bad = perichev().arg("validate").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));

    let wrong_ic = perichev()
        .args(["discontinuous", "--n", "8"])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(
        wrong_ic.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&wrong_ic.stderr)
    );

    let blocked = dir.path().join("file");
    fs::write(&blocked, "x").unwrap();
    let io = perichev()
        .args(["solve", "--n", "4", "--out"])
        .arg(blocked.join("sub"))
        .output()
        .unwrap();
    assert_eq!(io.status.code(), Some(2));
}

#[test]
fn unconverged_solves_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    // A huge stiffness makes the Taylor start useless at this degree.
    fs::write(
        &cfg,
        r#"{"experiment": "solve", "n_values": [24], "ic": "indicator", "kernel": {"amplitude": 1e6}}"#,
    )
    .unwrap();
    let output = perichev()
        .arg("solve")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .arg("--quiet")
        .output()
        .unwrap();
    assert_eq!(
        output.status.code(),
        Some(1),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    assert!(dir.path().join("manifest.json").exists());
}
