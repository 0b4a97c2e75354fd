use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qfi_cli::report::sha256_hex;
use qfi_cli::Scenario;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn qfictl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qfictl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn config(name: &str) -> String {
    configs().join(name).to_string_lossy().into_owned()
}

fn without_timing(csv: &str) -> Vec<String> {
    csv.lines()
        .map(|l| l.rsplit_once(',').map(|(head, _)| head.to_string()).unwrap_or_default())
        .collect()
}

#[test]
fn sweeps_are_deterministic() {
    let cfg = config("qubit_floquet_desk.toml");
    let a = qfictl(&["sweep-time", "--config", &cfg]);
    let b = qfictl(&["sweep-time", "--config", &cfg]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let (a, b) = (
        String::from_utf8(a.stdout).unwrap(),
        String::from_utf8(b.stdout).unwrap(),
    );
    assert_eq!(a.lines().count(), 6);
    assert_eq!(without_timing(&a), without_timing(&b));
}

#[test]
fn bundled_configs_round_trip() {
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let (s, canonical) = Scenario::load(&path, &[]).unwrap();
        let again = Scenario::from_toml(&canonical).unwrap();
        assert_eq!(s, again, "{}", path.display());
        assert_eq!(again.to_toml().unwrap(), canonical);
    }
}

#[test]
fn bundle_records_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let cfg = config("qubit_pang_jordan.toml");
    let o = qfictl(&[
        "sweep-time",
        "--config",
        &cfg,
        "--set",
        "grid.t_f=[1.0, 2.0]",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv, String::from_utf8(o.stdout).unwrap());
    assert!(out.join("plot.py").exists());

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let (_, canonical) = Scenario::load(Path::new(&cfg), &["grid.t_f=[1.0, 2.0]".to_string()]).unwrap();
    assert_eq!(report["provenance"]["config_sha256"], sha256_hex(&canonical));
    assert_eq!(report["provenance"]["steps"], serde_json::json!([50, 100]));
    assert_eq!(report["records"].as_array().unwrap().len(), 2);
    assert_eq!(report["qfi_convention"], "var");
}

#[test]
fn optimize_writes_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("qubit_restricted.toml");
    let o = qfictl(&[
        "optimize",
        "--config",
        &cfg,
        "--set",
        "control.iterations=5",
        "--set",
        "grid.steps=40",
        "--set",
        "grid.t_f=[2.0]",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let coeffs = std::fs::read_to_string(dir.path().join("coefficients.csv")).unwrap();
    let mut lines = coeffs.lines();
    assert_eq!(lines.next(), Some("tau,c_1,c_2"));
    assert_eq!(lines.count(), 41);
}

#[test]
fn afm_prints_matching_frequency() {
    let o = qfictl(&["afm"]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8(o.stdout).unwrap().trim(), "omega = 1826.666667");
    let o = qfictl(&["afm", "--first", "1,2", "--second", "3,4", "--delta", "2"]);
    // 8/2·(1·3 + 2·4/2) = 28
    assert_eq!(String::from_utf8(o.stdout).unwrap().trim(), "omega = 28.000000");
}

#[test]
fn exit_codes() {
    let cfg = config("qubit_uncontrolled.toml");
    // Unknown field.
    assert_eq!(
        qfictl(&["sweep-time", "--config", &cfg, "--set", "system.bogus=1"])
            .status
            .code(),
        Some(1)
    );
    // Past the dense capacity.
    let chain = config("chain_floquet_sweep_n.toml");
    let o = qfictl(&["sweep-n", "--config", &chain, "--set", "grid.n=[3, 13]"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("13"));
    // Too few steps per drive period.
    let desk = config("qubit_floquet_desk.toml");
    assert_eq!(
        qfictl(&["sweep-time", "--config", &desk, "--set", "grid.steps_per_period=10"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        qfictl(&["sweep-time", "--config", "/nonexistent.toml"]).status.code(),
        Some(1)
    );
}

#[test]
fn verify_passes_and_catches_sign_flip() {
    let ok = qfictl(&["verify"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stdout));
    let table = String::from_utf8(ok.stdout).unwrap();
    assert!(table.lines().all(|l| l.starts_with("PASS")));

    let bad = qfictl(&["verify", "--mutate", "sign-flip"]);
    assert_eq!(bad.status.code(), Some(3));
    let table = String::from_utf8(bad.stdout).unwrap();
    assert!(table.lines().any(|l| l.starts_with("FAIL") && l.contains("AFM")));
}

#[test]
fn verify_rejects_oversized_scenarios() {
    let chain = config("chain_floquet_l1.toml");
    let dir = tempfile::tempdir().unwrap();
    let big = dir.path().join("big.toml");
    let text = std::fs::read_to_string(&chain).unwrap().replace("n = 4", "n = 13");
    std::fs::write(&big, text).unwrap();
    let o = qfictl(&["verify", "--config", big.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        String::from_utf8_lossy(&o.stderr).contains("capacity") || String::from_utf8_lossy(&o.stderr).contains("13")
    );
}
