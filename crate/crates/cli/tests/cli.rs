// Copyright 2026 The qubit-kick Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::Path;
use std::process::{Command, Output};

fn qk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qubit-kick")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write_cfg(dir: &Path, text: &str) -> String {
    let p = dir.join("run.cfg");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn table1_passes_and_lists_every_platform() {
    let o = qk(&["table1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    for name in ["ion", "nanodiamond", "piezo", "degenerate"] {
        assert!(text.contains(name), "{text}");
    }
    let csv = stdout(&qk(&["table1", "--format", "csv"]));
    assert_eq!(csv.lines().count(), 10);
    assert!(csv.starts_with("platform,quantity,computed_n,published_n,rel_error\n"));
}

#[test]
fn missing_config_is_a_usage_error_naming_the_path() {
    let o = qk(&["simulate", "--config", "missing.cfg"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing.cfg"));
    assert!(o.stdout.is_empty());
}

#[test]
fn unknown_commands_and_flags_exit_2() {
    assert_eq!(qk(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(qk(&["ensemble", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(qk(&["ensemble", "--format", "xml"]).status.code(), Some(2));
    assert_eq!(qk(&["ensemble", "--threads", "0"]).status.code(), Some(2));
}

#[test]
fn bad_config_values_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for text in ["p = 1.5\n", "dt = 1\n", "wibble = 3\n", "eom_sign = sideways\n", "n_traj = many\n"] {
        let cfg = write_cfg(dir.path(), text);
        let o = qk(&["simulate", "--config", &cfg]);
        assert_eq!(o.status.code(), Some(2), "{text}: {}", stderr(&o));
        assert!(!stderr(&o).is_empty());
    }
}

#[test]
fn json_envelope_has_schema_and_echo() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "p = 0.25\nT = 10\nseed = 4\n");
    let o = qk(&["simulate", "--config", &cfg, "--seed", "9", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["schema"], "qubit-kick/1");
    assert_eq!(v["command"], "simulate");
    assert_eq!(v["config_echo"]["seed"], "9");
    assert_eq!(v["config_echo"]["p"], "2.5e-1");
    assert_eq!(v["data"]["columns"], serde_json::json!(["tau", "q", "p"]));
    assert_eq!(v["data"]["rows"].as_array().unwrap().len(), 1001);
}

#[test]
fn csv_rows_round_trip_at_full_precision() {
    let csv = stdout(&qk(&["simulate", "--seed", "3"]));
    for line in csv.lines().skip(1) {
        for cell in line.split(',') {
            let x: f64 = cell.parse().unwrap();
            assert_eq!(format!("{x:.16e}"), cell);
        }
    }
}

#[test]
fn out_flag_writes_file_and_nothing_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("map.csv");
    let o = qk(&["bloch-map", "--resolution", "8", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("theta,phi,eta_f,eta_st\n"));
    assert_eq!(text.lines().count(), 65);
    assert_eq!(qk(&["bloch-map", "--resolution", "4"]).status.code(), Some(1));
}

#[test]
fn ensemble_is_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for threads in ["1", "8"] {
        let out = dir.path().join(format!("ens{threads}.csv"));
        let psd = dir.path().join(format!("psd{threads}.csv"));
        let o = qk(&[
            "ensemble",
            "--seed",
            "7",
            "--threads",
            threads,
            "--out",
            out.to_str().unwrap(),
            "--psd",
            psd.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        files.push((std::fs::read(out).unwrap(), std::fs::read(psd).unwrap()));
    }
    assert_eq!(files[0], files[1]);
    assert!(String::from_utf8_lossy(&files[0].1).starts_with("freq,psd\n"));
}

#[test]
fn simulate_index_matches_between_solvers() {
    let closed = stdout(&qk(&["simulate", "--index", "5", "--seed", "2"]));
    let rk4 = stdout(&qk(&["simulate", "--index", "5", "--seed", "2", "--solver", "rk4"]));
    let parse = |s: &str| -> Vec<f64> { s.lines().skip(1).flat_map(|l| l.split(',').map(|c| c.parse::<f64>().unwrap()).collect::<Vec<_>>()).collect() };
    let (a, b) = (parse(&closed), parse(&rk4));
    assert_eq!(a.len(), b.len());
    assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-6));
}

#[test]
fn verify_commands_pass_by_default() {
    for args in [&["verify", "bch"][..], &["verify", "influence"], &["verify", "noise", "--samples", "20000"], &["verify", "oracle"]] {
        let o = qk(args);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", stderr(&o));
    }
    let o = qk(&["verify", "oracle"]);
    assert!(stderr(&o).contains("hamilton"));
}

#[test]
fn reconstruct_reports_both_branches_and_convention() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "p = 0.3\nphi = 1.0\nn_traj = 4000\ndt = 0.02\n");
    let o = qk(&["reconstruct", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["data"]["eom_sign"], "hamilton");
    let b = v["data"]["state"]["p_branches"].as_array().unwrap();
    assert!((b[0].as_f64().unwrap() - 0.3).abs() < 0.05);
    assert!((b[1].as_f64().unwrap() - 0.7).abs() < 0.05);
    assert!(v["data"]["nonstationary"].is_null());
}

#[test]
fn resonant_reconstruction_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "r = 1\nn_traj = 100\n");
    let o = qk(&["reconstruct", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("resonan"), "{}", stderr(&o));
}
