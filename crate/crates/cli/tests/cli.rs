use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn spad_gate(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_spad-gate"));
    cmd.args(args).env_remove("SPAD_GATE_THREADS");
    if let Some(t) = threads {
        cmd.env("SPAD_GATE_THREADS", t);
    }
    cmd.output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const HEADER: &str = "axis_value,ber_analytic,ber_mc,mc_halfwidth,tg_star,u0,u1,var0,var1";

const SCENARIO: &str = r#"{
  "link": {"received_power_nw": 4, "background_power_nw": 3, "array_size": 64,
           "symbol_period_ns": 20, "gate_on_ns": 10},
  "mode": "both",
  "sweep": {"axis": "received_power_nw", "values": [2, 4, 6]},
  "gate": {"policy": "optimized"},
  "mc": {"bits": 20000}
}"#;

#[test]
fn empty_sweep_writes_header_only() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "s.json",
        r#"{"link": {"received_power_nw": 4, "background_power_nw": 3, "array_size": 64,
            "symbol_period_ns": 20}, "sweep": {"axis": "gate_on_ns", "values": []}}"#,
    );
    let out = spad_gate(&["ber", "--config", &cfg], None);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        format!("{HEADER}\n")
    );
}

#[test]
fn output_is_byte_identical_across_runs_and_thread_counts() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "s.json", SCENARIO);
    let mut outputs = Vec::new();
    for (i, threads) in [None, Some("1"), Some("3")].into_iter().enumerate() {
        let path = dir.path().join(format!("out{i}.csv"));
        let out = spad_gate(
            &[
                "ber",
                "--config",
                &cfg,
                "--seed",
                "9",
                "--out",
                path.to_str().unwrap(),
            ],
            threads,
        );
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        outputs.push(fs::read(&path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
    let text = String::from_utf8(outputs[0].clone()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], HEADER);
    assert_eq!(lines.len(), 4);
    // Simulated columns are filled in "both" mode.
    assert!(lines[1].split(',').nth(2).is_some_and(|f| !f.is_empty()));

    let other = dir.path().join("other.csv");
    spad_gate(
        &[
            "ber",
            "--config",
            &cfg,
            "--seed",
            "10",
            "--out",
            other.to_str().unwrap(),
        ],
        None,
    );
    assert_ne!(fs::read(other).unwrap(), outputs[0]);
}

#[test]
fn invalid_config_names_the_field() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "bad.json",
        r#"{"link": {"received_power_nw": 4, "background_power_nw": 3, "array_size": 64,
            "symbol_period_ns": 20, "pde": 1.7}}"#,
    );
    let out = spad_gate(&["ber", "--config", &cfg], None);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("link.pde"), "{err}");

    let cfg = write(
        dir.path(),
        "missing.json",
        r#"{"link": {"received_power_nw": 4}}"#,
    );
    let out = spad_gate(&["ber", "--config", &cfg], None);
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .contains("background_power_nw"));

    let out = spad_gate(&["ber", "--config", "/nonexistent/x.json"], None);
    assert!(!out.status.success());

    let cfg = write(dir.path(), "ok.json", SCENARIO);
    let out = spad_gate(&["ber", "--config", &cfg], Some("zero"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .contains("SPAD_GATE_THREADS"));
}

#[test]
fn opt_tg_rejects_gate_sweep_and_reports_optimum() {
    let dir = TempDir::new().unwrap();
    let gate_sweep = write(
        dir.path(),
        "g.json",
        r#"{"link": {"received_power_nw": 8, "background_power_nw": 7, "array_size": 64,
            "symbol_period_ns": 20}, "sweep": {"axis": "gate_on_ns", "values": [5]}}"#,
    );
    let out = spad_gate(&["opt-tg", "--config", &gate_sweep], None);
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .contains("sweep.axis"));

    let single = write(
        dir.path(),
        "p.json",
        r#"{"link": {"received_power_nw": 8, "background_power_nw": 7, "array_size": 64,
            "symbol_period_ns": 20}}"#,
    );
    let out = spad_gate(&["opt-tg", "--config", &single], None);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let row: Vec<f64> = text
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|f| f.parse().unwrap_or(f64::NAN))
        .collect();
    assert_eq!(row[0], 8.0);
    assert!((row[4] - 10.0).abs() <= 0.3, "T_g* {}", row[4]);
    assert!(row[1] > 1.75e-5 && row[1] < 7e-5, "BER {}", row[1]);
}

#[test]
fn mc_writes_trace() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "s.json",
        r#"{"link": {"received_power_nw": 4, "background_power_nw": 3, "array_size": 2,
            "symbol_period_ns": 20, "gate_on_ns": 8}, "mc": {"bits": 10000, "trace_symbols": 50}}"#,
    );
    let trace = dir.path().join("trace.csv");
    let out = spad_gate(
        &["mc", "--config", &cfg, "--trace", trace.to_str().unwrap()],
        None,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = fs::read_to_string(trace).unwrap();
    assert!(text.starts_with("pixel,time_s,event\n"));
    assert!(text
        .lines()
        .skip(1)
        .all(|l| l.ends_with(",incident") || l.ends_with(",detected")));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(2)
        .is_some_and(|f| !f.is_empty()));
}

#[test]
fn stats_lists_every_grid_point() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "g.json",
        r#"{"symbol_period_ns": 20, "rates_hz": [1e7, 5e8], "gate_on_ns": [5, 10, 15]}"#,
    );
    let out = spad_gate(&["stats", "--config", &cfg], None);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "rate_hz,gate_on_ns,mean,second_moment,variance,mc_mean,mc_mean_se,mc_variance,mc_variance_se");
    assert_eq!(lines.len(), 7);
    assert!(lines[1].ends_with(",,,,"));
}

#[test]
fn validate_zero_rate_passes() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "v.json",
        r#"{"symbol_period_ns": 20, "rates_hz": [0], "gate_on_ns": [10], "trials": 100000}"#,
    );
    let out = spad_gate(&["validate", "--config", &cfg], None);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8(out.stderr).unwrap().contains("PASS"));
}

#[test]
fn validate_passes_on_moment_grid() {
    let dir = TempDir::new().unwrap();
    let gates: Vec<String> = (1..=20).map(|k| k.to_string()).collect();
    let cfg = write(
        dir.path(),
        "v.json",
        &format!(
            r#"{{"symbol_period_ns": 20, "dead_time_ns": 10, "rates_hz": [1e7, 1e8, 5e8],
                "gate_on_ns": [{}], "trials": 1000000, "seed": 4}}"#,
            gates.join(",")
        ),
    );
    let report = dir.path().join("v.csv");
    let out = spad_gate(
        &[
            "validate",
            "--config",
            &cfg,
            "--out",
            report.to_str().unwrap(),
        ],
        None,
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(out.status.success(), "{stdout}");
    assert!(stdout.contains("PASS: all 60 points"));
    assert_eq!(fs::read_to_string(report).unwrap().lines().count(), 61);
}

#[test]
fn validate_catches_dead_time_mismatch() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "v.json",
        r#"{"symbol_period_ns": 20, "rates_hz": [1e8, 5e8], "gate_on_ns": [8, 16],
            "trials": 200000, "mc_dead_time_ns": 12}"#,
    );
    let out = spad_gate(&["validate", "--config", &cfg], None);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("FAIL"));
}

#[test]
fn presets_write_their_tables() {
    let dir = TempDir::new().unwrap();
    let out = spad_gate(
        &["preset", "fig5", "--out", dir.path().to_str().unwrap()],
        None,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for pr in [8, 10, 12, 15] {
        let text = fs::read_to_string(dir.path().join(format!("fig5_pr{pr}.csv"))).unwrap();
        assert_eq!(text.lines().next(), Some(HEADER));
        assert_eq!(text.lines().count(), 201);
    }
    let out = spad_gate(
        &[
            "preset",
            "fig3",
            "--no-mc",
            "--out",
            dir.path().to_str().unwrap(),
        ],
        None,
    );
    assert!(out.status.success());
    assert_eq!(
        fs::read_to_string(dir.path().join("fig3.csv"))
            .unwrap()
            .lines()
            .count(),
        121
    );

    let out = spad_gate(
        &["preset", "fig11", "--out", dir.path().to_str().unwrap()],
        None,
    );
    assert!(!out.status.success());
}
