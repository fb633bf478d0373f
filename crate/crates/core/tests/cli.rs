use std::path::Path;
use std::process::{Command, Output};

use bellcorr::experiments::{summary_from_records_csv, RECORDS_HEADER, SUMMARY_HEADER};

fn bellcorr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bellcorr"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn demo_config() -> String {
    format!("{}/configs/demo.conf", env!("CARGO_MANIFEST_DIR"))
}

fn sweep(dir: &Path, threads: &str) -> Output {
    bellcorr(&[
        "sweep",
        "--config",
        &demo_config(),
        "--out",
        dir.to_str().unwrap(),
        "--threads",
        threads,
        "--set",
        "trials=4",
    ])
}

#[test]
fn sweep_is_reproducible_across_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let out = sweep(a.path(), "1");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(sweep(b.path(), "3").status.success());

    for file in ["records.csv", "summary.csv"] {
        let x = std::fs::read(a.path().join(file)).unwrap();
        let y = std::fs::read(b.path().join(file)).unwrap();
        assert_eq!(x, y, "{file} differs");
    }

    let records = std::fs::read_to_string(a.path().join("records.csv")).unwrap();
    let summary = std::fs::read_to_string(a.path().join("summary.csv")).unwrap();
    assert_eq!(records.lines().next(), Some(RECORDS_HEADER));
    assert_eq!(summary.lines().next(), Some(SUMMARY_HEADER));
    // 2 alphas x 4 trials
    assert_eq!(records.lines().count(), 1 + 8);
    assert_eq!(summary_from_records_csv(&records).unwrap(), summary);
}

#[test]
fn missing_config_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = bellcorr(&[
        "sweep",
        "--config",
        "/no/such/file.conf",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/no/such/file.conf"));
}

#[test]
fn unknown_key_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = bellcorr(&["sweep", "--out", dir.path().to_str().unwrap(), "--set", "colour=red"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("colour") && err.contains("alpha_grid"), "{err}");
}

#[test]
fn unwritable_output_exits_with_io_code() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let target = blocker.join("sub");
    let out = bellcorr(&[
        "sweep",
        "--out",
        target.to_str().unwrap(),
        "--set",
        "trials=1",
        "--set",
        "alpha_grid=3.0",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

fn classify(args: &[&str]) -> serde_json::Value {
    let mut full = vec!["classify"];
    full.extend_from_slice(args);
    let out = bellcorr(&full);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json output")
}

#[test]
fn classify_verdicts() {
    let v = classify(&["--n", "10", "--m", "100", "--seed", "1"]);
    assert_eq!(v["verdict"], "local");
    assert_eq!(v["certifier"], "fast_local");

    let v = classify(&["--n", "8", "--m", "4", "--mode", "bernoulli", "--seed", "2"]);
    assert_eq!(v["verdict"], "local");

    let v = classify(&["--n", "40", "--m", "2", "--seed", "3", "--chsh", "full"]);
    assert_eq!(v["verdict"], "nonlocal");
    assert_eq!(v["certifier"], "chsh");
}

#[test]
fn rmt_reports() {
    let out = bellcorr(&["rmt", "--check", "alpha0"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("alpha0 computed"), "{text}");

    let out = bellcorr(&["rmt", "--check", "mp", "--C", "2"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "f(2) = 0");
}
