use std::path::Path;
use std::process::{Command, Output};

fn ddgate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ddgate")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path.display().to_string()
}

const CLASSICAL: &str = r#"{"kind": "classical", "ou": {"sigma": 4366.0, "tau_c": 2e-4, "dt": 2e-5}, "static_sigma": 1820.0}"#;

#[test]
fn bad_arguments_exit_with_config_error() {
    assert_eq!(ddgate(&["frobnicate"]).status.code(), Some(1));
    let out = ddgate(&["compile", "--gate", "CNOT", "--scheme", "xy8", "--tau", "1e-5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("CNOT"));
    assert_eq!(ddgate(&["compile", "--gate", "H", "--scheme", "xy8", "--tau", "5"]).status.code(), Some(1));
    assert_eq!(ddgate(&["sweep"]).status.code(), Some(1), "sweep needs --config");
    assert_eq!(ddgate(&["--help"]).status.code(), Some(0));
}

#[test]
fn compile_emits_schedule_json() {
    let out = ddgate(&["compile", "--gate", "PI8", "--scheme", "kdd", "--tau", "3e-6"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["header"]["pulse_count"], 330);
    assert_eq!(v["events"].as_array().unwrap().iter().filter(|e| e["kind"] != "delay").count(), 330);
}

#[test]
fn simulate_writes_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!(r#"{{"noise": {CLASSICAL}, "gates": ["NOT"], "schemes": ["xy8"], "tau_grid": [1e-5]}}"#),
    );
    let out = ddgate(&["simulate", "--config", &cfg, "--gate", "H", "--scheme", "xy8", "--tau", "3e-6", "--realizations", "50"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "gate,scheme,tau_s,gate_time_s,pulse_count,fidelity,fidelity_stderr,seed,error");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("H,xy8,"));
    assert!(lines[1].ends_with(','), "empty error column");
}

#[test]
fn sweep_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!(
            r#"{{"noise": {CLASSICAL}, "gates": ["NOT", "NOOP"], "schemes": ["simple_padded", "xy4"],
                "tau_grid": [3e-6, 1e-5, 3e-5], "realizations": 40, "seed": 3}}"#
        ),
    );
    let csv = dir.path().join("rows.csv");
    let out = ddgate(&["sweep", "--config", &cfg, "--out", csv.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 1 + 2 * 2 * 3);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("rows.summary.json")).unwrap()).unwrap();
    assert_eq!(summary["cells"].as_array().unwrap().len(), 4);
    assert_eq!(summary["seed"], 3);

    // Same config and seed, fresh process: identical bytes.
    let again = dir.path().join("again.csv");
    assert!(ddgate(&["sweep", "--config", &cfg, "--out", again.to_str().unwrap(), "--jobs", "2"]).status.success());
    assert_eq!(std::fs::read(&csv).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn invalid_config_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"noise": {"kind": "none"}, "gates": [], "schemes": ["xy4"], "tau_grid": [1e-5]}"#);
    assert_eq!(ddgate(&["sweep", "--config", &cfg]).status.code(), Some(1));
    let missing = dir.path().join("nope.json");
    assert_eq!(ddgate(&["sweep", "--config", missing.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn calibrate_writes_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cal.json");
    let status = ddgate(&["calibrate", "--realizations", "500", "--out", out.to_str().unwrap()]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["target_t2_star"], 370e-6);
    assert_eq!(v["realizations"], 500);
}
