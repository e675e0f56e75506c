//! Exit-code contract and end-to-end runs of the table-emitting modes.

use nls_cli::{GridConfig, Mode, RunConfig, RunError, Tolerances};
use std::process::Command;

fn tmp(name: &str) -> String {
    std::env::temp_dir().join(name).to_string_lossy().to_string()
}

#[test]
fn malformed_config_exits_two() {
    let bad = RunConfig::from_json("{\"mode\": \"construct\"}");
    assert!(matches!(bad, Err(RunError::Config(_))));
    assert_eq!(bad.unwrap_err().exit_code(), 2);
    // a construct run without a problem is a config rejection
    let config = RunConfig {
        mode: Mode::Construct,
        problem: None,
        problem_path: None,
        grid: GridConfig::default(),
        tolerances: Tolerances::default(),
        out_dir: tmp("nls-cli-noproblem"),
        seed: 0,
        positive_part: false,
        sphere_directions: None,
        kernels: None,
        sweep_ps: None,
        mapcheck_rows: None,
    };
    let err = match nls_cli::run(&config) {
        Err(e) => e,
        Ok(_) => panic!("run without a problem should be rejected"),
    };
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn hypothesis_violation_exits_two() {
    // beta below (n-2)/2 violates the weight growth hypothesis
    let json = r#"{
        "mode": "construct",
        "out_dir": "/tmp/nls-cli-hyp",
        "problem": {
            "n": 3, "p": 3.05, "mode": "supercritical",
            "V": {"kind": "constant", "value": 1.0, "alpha": 0.0, "C1": 1.0},
            "Gamma": {"kind": "constant", "value": 1.0, "beta": 0.1, "C2": 1.0, "gamma0": 1.0}
        }
    }"#;
    let config = RunConfig::from_json(json).unwrap();
    let err = match nls_cli::run(&config) {
        Err(e) => e,
        Ok(_) => panic!("hypothesis violation should be rejected"),
    };
    assert_eq!(err.exit_code(), 2, "{err}");
}

#[test]
fn regularity_mode_end_to_end() {
    let json = format!(
        r#"{{
        "mode": "regularity",
        "out_dir": "{}",
        "grid": {{"nodes_per_decade": 120}},
        "problem": {{
            "n": 3, "p": 2.0, "mode": "subcritical",
            "V": {{"kind": "constant", "value": 1.0, "alpha": 0.0, "C1": 1.0}},
            "Gamma": {{"kind": "constant", "value": 1.0, "beta": 3.0, "C2": 1.0, "gamma0": 1.0}},
            "g": {{"kind": "power", "p": 2.0, "C4": 1.0, "C6": 1.0}}
        }}
    }}"#,
        tmp("nls-cli-regularity")
    );
    let config = RunConfig::from_json(&json).unwrap();
    let outcome = nls_cli::run(&config).unwrap();
    assert_eq!(outcome.exit_code, 0, "{}", outcome.report_json);
    assert!(outcome.report_json.contains("regularity.bootstrap_stable"));
}

#[test]
fn construct_u0_mode_emits_certificate() {
    let json = format!(
        r#"{{
        "mode": "construct_u0",
        "out_dir": "{}",
        "grid": {{"nodes_per_decade": 150}},
        "problem": {{
            "n": 3, "p": 3.1, "mode": "supercritical",
            "V": {{"kind": "constant", "value": 1.0, "alpha": 0.0, "C1": 1.0}},
            "Gamma": {{"kind": "constant", "value": 1.0, "beta": 3.0, "C2": 1.0, "gamma0": 1.0}}
        }}
    }}"#,
        tmp("nls-cli-u0")
    );
    let outcome = nls_cli::run(&RunConfig::from_json(&json).unwrap()).unwrap();
    assert_eq!(outcome.exit_code, 0, "{}", outcome.report_json);
    let dir = std::path::PathBuf::from(tmp("nls-cli-u0"));
    assert!(dir.join("u0.csv").exists());
    assert!(dir.join("u0_extension.json").exists());
}

#[test]
fn binary_reports_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_nls");
    // missing config file
    let status = Command::new(exe)
        .args(["run", "--config", "/definitely/not/there.json"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    // kernels run through the binary with overrides
    let cfg = tmp("nls-cli-kernels-config.json");
    std::fs::write(
        &cfg,
        r#"{"mode": "kernels", "out_dir": "/tmp/nls-cli-kernels-out", "kernels": {"n": 1, "omega": 4.0, "points": 64}}"#,
    )
    .unwrap();
    let status = Command::new(exe)
        .args(["kernels", "--config", &cfg])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
}
