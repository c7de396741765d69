use std::path::Path;

use bardina::harness::commands::{cmd_bounds, cmd_lyapunov, parse_bounds_input, read_diagnostics, DIAGNOSTICS_CSV, FINAL_SNAPSHOT};
use bardina::harness::{cmd_simulate, cmd_verify, load_snapshot, parse_config, CommandOptions};
use bardina::Error;

fn run_config(t_end: f64, initial: &str) -> String {
    format!(
        r#"{{
  "geometry": {{"kind": "sphere"}},
  "truncation": 8,
  "params": {{"nu": 0.1, "alpha": 0.5}},
  "forcing": {{"modes": [{{"index": {{"degree": 3, "order": 1}}, "amplitude": 0.3}}]}},
  "initial": {initial},
  "scheme": {{"kind": "if-rk4", "dt": 0.01, "t_end": {t_end}, "stride": 4}},
  "lyapunov": {{"n": 4, "t_average": 2.0, "renorm_interval": 0.5}},
  "seed": 3
}}"#
    )
}

const RANDOM: &str = r#"{"kind": "random"}"#;

fn opts(dir: &Path) -> CommandOptions {
    CommandOptions { out: dir.to_path_buf(), resume: None }
}

#[test]
fn zero_length_run_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let spec = parse_config(&run_config(0.0, RANDOM)).unwrap();
    let out = cmd_simulate(&spec, &opts(dir.path())).unwrap();
    assert!(out.success);
    let text = std::fs::read_to_string(dir.path().join(DIAGNOSTICS_CSV)).unwrap();
    assert_eq!(text.lines().count(), 1);
    let snap = load_snapshot(&dir.path().join(FINAL_SNAPSHOT)).unwrap();
    assert_eq!(snap.meta.t, 0.0);
}

#[test]
fn resumed_run_reproduces_tail_bitwise() {
    let full = tempfile::tempdir().unwrap();
    let half = tempfile::tempdir().unwrap();
    let rest = tempfile::tempdir().unwrap();
    cmd_simulate(&parse_config(&run_config(2.0, RANDOM)).unwrap(), &opts(full.path())).unwrap();
    cmd_simulate(&parse_config(&run_config(1.0, RANDOM)).unwrap(), &opts(half.path())).unwrap();
    let resume = CommandOptions { out: rest.path().to_path_buf(), resume: Some(half.path().join(FINAL_SNAPSHOT)) };
    cmd_simulate(&parse_config(&run_config(2.0, RANDOM)).unwrap(), &resume).unwrap();

    let full_csv = std::fs::read_to_string(full.path().join(DIAGNOSTICS_CSV)).unwrap();
    let rest_csv = std::fs::read_to_string(rest.path().join(DIAGNOSTICS_CSV)).unwrap();
    let full_rows: Vec<&str> = full_csv.lines().skip(1).collect();
    let rest_rows: Vec<&str> = rest_csv.lines().skip(1).collect();
    assert_eq!(rest_rows.len(), 25);
    assert_eq!(&full_rows[full_rows.len() - rest_rows.len()..], rest_rows.as_slice());
    assert_eq!(
        std::fs::read(full.path().join(FINAL_SNAPSHOT)).unwrap(),
        std::fs::read(rest.path().join(FINAL_SNAPSHOT)).unwrap()
    );
}

#[test]
fn resume_with_other_parameters_is_rejected() {
    let a = tempfile::tempdir().unwrap();
    cmd_simulate(&parse_config(&run_config(0.1, RANDOM)).unwrap(), &opts(a.path())).unwrap();
    let other = run_config(0.5, RANDOM).replace("\"nu\": 0.1", "\"nu\": 0.2");
    let resume = CommandOptions { out: a.path().join("b"), resume: Some(a.path().join(FINAL_SNAPSHOT)) };
    let err = cmd_simulate(&parse_config(&other).unwrap(), &resume).unwrap_err();
    assert!(matches!(err, Error::SnapshotMismatch { .. }), "{err}");
}

#[test]
fn unforced_eigenmode_rows_decay_exponentially() {
    let dir = tempfile::tempdir().unwrap();
    let text = run_config(1.0, r#"{"kind": "eigenmode", "index": {"degree": 2, "order": 0}, "amplitude": 1.0}"#)
        .replace("\"amplitude\": 0.3", "\"amplitude\": 0.0");
    let spec = parse_config(&text).unwrap();
    assert!(cmd_simulate(&spec, &opts(dir.path())).unwrap().success);
    let rows = read_diagnostics(&dir.path().join(DIAGNOSTICS_CSV)).unwrap();
    let e0 = rows[0].e1 * (2.0 * 0.1 * 6.0 * rows[0].t).exp();
    for r in &rows {
        let want = e0 * (-2.0 * 0.1 * 6.0 * r.t).exp();
        assert!((r.e1 - want).abs() <= 1e-10 * want, "t = {}: {} vs {}", r.t, r.e1, want);
        assert_eq!(r.violations, 0);
    }
}

#[test]
fn lyapunov_rejects_oversized_ensemble() {
    let text = run_config(1.0, RANDOM).replace("\"n\": 4", "\"n\": 1000");
    match parse_config(&text).unwrap_err() {
        Error::Config { path, .. } => assert_eq!(path, "lyapunov.n"),
        other => panic!("unexpected error {other}"),
    }
}

#[test]
fn lyapunov_writes_series_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = cmd_lyapunov(&parse_config(&run_config(1.0, RANDOM)).unwrap(), &opts(dir.path())).unwrap();
    assert!(out.success, "{:?}", out.lines);
    let csv = std::fs::read_to_string(dir.path().join("exponents.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert_eq!(header.split(',').count(), 1 + 2 * 4);
    assert_eq!(csv.lines().count(), 1 + 4);
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("exponent_report.json")).unwrap()).unwrap();
    assert_eq!(json["report"]["exponents"].as_array().unwrap().len(), 4);
    assert!(json["trace_check"]["applicable"].as_bool().unwrap());
}

#[test]
fn unforced_bounds_are_zero() {
    let dir = tempfile::tempdir().unwrap();
    let text = run_config(1.0, RANDOM).replace("\"amplitude\": 0.3", "\"amplitude\": 0.0");
    cmd_bounds(&parse_bounds_input(&text).unwrap(), &opts(dir.path())).unwrap();
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("bounds.json")).unwrap()).unwrap();
    assert_eq!(json["grashof"].as_f64().unwrap(), 0.0);
    assert_eq!(json["n_star"].as_f64().unwrap(), 0.0);
    assert_eq!(json["radii"]["rho"].as_f64().unwrap(), 0.0);
}

#[test]
fn verify_checks_an_existing_run() {
    let dir = tempfile::tempdir().unwrap();
    let spec = parse_config(&run_config(1.0, RANDOM)).unwrap();
    cmd_simulate(&spec, &opts(dir.path())).unwrap();
    let out = cmd_verify(&spec, &opts(dir.path())).unwrap();
    assert!(out.success, "{:?}", out.lines);
    assert!(out.lines.iter().any(|l| l.contains("existing run envelopes")));
}

#[test]
fn unknown_config_key_names_its_path() {
    let text = run_config(1.0, RANDOM).replace("\"nu\": 0.1", "\"nu\": 0.1, \"viscosity\": 2");
    match parse_config(&text).unwrap_err() {
        Error::Config { path, .. } => assert!(path.starts_with("params"), "{path}"),
        other => panic!("unexpected error {other}"),
    }
}
