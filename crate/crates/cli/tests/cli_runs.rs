use std::path::Path;
use std::process::{Command, Output};

fn gridcert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gridcert")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const THREE_BUS_AGC: &str = r#"{
  "buses": [
    {"kind": "agc", "m": 0.16, "d": 0.02, "tg": 0.08, "tt": 0.40, "r": 3.00, "beta": 0.33, "k": 0.30},
    {"kind": "agc", "m": 0.20, "d": 0.02, "tg": 0.06, "tt": 0.44, "r": 2.73, "beta": 0.40, "k": 0.20},
    {"kind": "agc", "m": 0.12, "d": 0.02, "tg": 0.07, "tt": 0.30, "r": 2.82, "beta": 0.38, "k": 0.40}
  ],
  "lines": [[0, 1, 0.2], [1, 2, 0.2], [0, 2, 0.2]],
  "vmax": [1.0, 1.0, 1.0],
  "operating_point": {"v0": [1.0, 0.98, 0.99], "theta0": [0.0, 0.1, -0.05]}
}"#;

#[test]
fn certify_is_deterministic_and_agrees_with_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "agc.json", THREE_BUS_AGC);
    let a = gridcert(&["certify", "--spec", &spec, "--oracle", "--seed", "3"]);
    let b = gridcert(&["certify", "--spec", &spec, "--oracle", "--seed", "3", "--jobs", "1"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["certified"], true);
    assert_eq!(v["oracle"]["kind"], "stable");
}

#[test]
fn gamma_star_regression_value() {
    let o = gridcert(&["gamma-star", "--p-num", "1", "--p-den", "1,1", "--T", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let g = v["gamma_star"].as_f64().unwrap();
    assert!((g - (3.0 + 2.0 * 2f64.sqrt())).abs() < 1e-5, "{g}");
}

#[test]
fn counterexample_reports_instability_with_exit_one() {
    let o = gridcert(&["counterexample", "--p1-num", "1", "--p1-den", "1,1", "--gamma", "7", "--T", "1"]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for key in ["omega0", "L", "partner_num", "partner_den", "spec"] {
        assert!(!v[key].is_null(), "missing {key}");
    }
    let o = gridcert(&["counterexample", "--p1-num", "1", "--p1-den", "1,1", "--gamma", "5", "--T", "1"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn errors_exit_two_with_pointer() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "bad.json", r#"{"buses": [{"kind": "swing", "m": 1, "d": 1}], "lines": []}"#);
    let o = gridcert(&["certify", "--spec", &spec]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/vmax"));
    assert_eq!(gridcert(&["certify"]).status.code(), Some(2));
}

#[test]
fn simulate_and_export_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "agc.json", THREE_BUS_AGC);
    let flows = dir.path().join("flows.csv");
    let o = gridcert(&[
        "simulate", "--spec", &spec, "--end", "1", "--t-end", "2", "--sample-every", "100",
        "--flows", flows.to_str().unwrap(), "--seed", "5",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let states = String::from_utf8(o.stdout).unwrap();
    assert!(states.starts_with("t,bus,theta_dot,p_n\n"));
    assert_eq!(states.lines().count(), 1 + 3 * 21);
    assert!(std::fs::read_to_string(&flows).unwrap().starts_with("t,i,j,flow\n"));

    let o = gridcert(&["nyquist-export", "--spec", &spec, "--bus", "1", "--grid", "0.1,10,5"]);
    let csv = String::from_utf8(o.stdout).unwrap();
    assert!(csv.starts_with("omega,re,im\n"));
    assert_eq!(csv.lines().count(), 6);
}

#[test]
fn droop_delay_exit_codes() {
    let ok = gridcert(&["droop-delay", "--m", "0.16", "--gamma", "2", "--tau", "0.3"]);
    assert_eq!(ok.status.code(), Some(0));
    let bad = gridcert(&["droop-delay", "--m", "0.16", "--gamma", "2", "--tau", "0.33"]);
    assert_eq!(bad.status.code(), Some(1));
}
