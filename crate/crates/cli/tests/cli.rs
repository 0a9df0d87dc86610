//! End-to-end tests of the binary: artifacts, exit codes, config
//! diagnostics, and thread-count independence of the outputs.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_nsfrac")
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn write_cfg(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("cfg.json");
    std::fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().unwrap()
}

#[test]
fn build_writes_curve_starting_at_the_left_knot() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("curve.csv");
    let out = Command::new(bin())
        .args(["build", "-c"])
        .arg(fixture("bv_fractal.json"))
        .arg("-o")
        .arg(&csv)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,y"));
    // sine-like germ vanishes at x = 0, and the fractal interpolates there
    assert_eq!(lines.next(), Some("0,0"));
    assert!(text.lines().count() > 1000);
}

#[test]
fn check_exit_codes_follow_the_verdict() {
    let out = run(&[
        "check",
        "--space",
        "bv",
        "-c",
        fixture("bv_fractal.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["pass"], serde_json::Value::Bool(true));

    // 0.2 violates the BV threshold 1/(2*4) = 0.125
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        r#"{
  "partition": {"uniform": {"intervals": 4, "domain": [0.0, 1.0]}},
  "scaling": {"levels": [[{"constant": 0.2}, {"constant": 0.2}, {"constant": 0.2}, {"constant": 0.2}]]},
  "space": {"kind": "bv"}
}"#,
    );
    let out = run(&["check", "-c", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["pass"], serde_json::Value::Bool(false));
    assert_eq!(report["conditions"]["worst"]["quantity"], 0.2);
}

#[test]
fn invalid_configs_exit_one_with_field_diagnostics() {
    let dir = tempfile::tempdir().unwrap();

    // unknown field
    let cfg = write_cfg(dir.path(), r#"{"partition": {"knotz": [0, 1, 2]}}"#);
    let out = run(&["check", "--space", "bv", "-c", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("config invalid"), "stderr: {err}");
    assert!(err.contains("knotz"), "stderr: {err}");

    // missing section
    let cfg = write_cfg(dir.path(), r#"{"partition": {"knots": [0.0, 0.5, 1.0]}}"#);
    let out = run(&["build", "-c", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("germ"));

    // non-monotone knots
    let cfg = write_cfg(dir.path(), r#"{"partition": {"knots": [0.0, 1.0, 0.5]}}"#);
    let out = run(&["check", "--space", "bv", "-c", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("strictly increasing"));

    // malformed JSON
    let cfg = write_cfg(dir.path(), "{ not json");
    let out = run(&["check", "--space", "bv", "-c", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn dimension_reports_a_slope() {
    let out = run(&[
        "dimension",
        "-c",
        fixture("bv_fractal.json").to_str().unwrap(),
        "--kmin",
        "4",
        "--kmax",
        "9",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let slope = report["estimate"]["slope"].as_f64().unwrap();
    assert!((slope - 1.0).abs() < 0.15, "slope {slope}");
    assert_eq!(report["claim_pass"], serde_json::Value::Bool(true));
}

#[test]
fn ifs_runs_and_flags_non_summable_schedules() {
    let out = run(&["ifs", "-c", fixture("cantor_ifs.json").to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["ball_radius"], 2.0);
    assert!(report["trajectory"]["converged"].as_bool().unwrap());

    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        r#"{
  "ifs": {
    "levels": [
      [{"linear": [[0.5, 0.0], [0.0, 0.5]], "translation": [0.25, 0.0]}],
      [{"linear": [[2.0, 0.0], [0.0, 2.0]], "translation": [0.0, 0.0]}]
    ],
    "schedule": "cycle",
    "initial": [[0.0, 0.0], [1.0, 0.0]],
    "max-levels": 12,
    "tol": 1e-9
  }
}"#,
    );
    let out = run(&["ifs", "-c", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("non-summable"));
}

#[test]
fn evaluate_is_thread_count_independent() {
    let dir = tempfile::tempdir().unwrap();
    let run_with = |threads: &str, tag: &str| -> Vec<u8> {
        let csv = dir.path().join(format!("eval-{tag}.csv"));
        let status = Command::new(bin())
            .args(["evaluate", "-c"])
            .arg(fixture("bv_fractal.json"))
            .arg("-o")
            .arg(&csv)
            .env("NSFRAC_THREADS", threads)
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(&csv).unwrap()
    };
    assert_eq!(run_with("1", "a"), run_with("4", "b"));
}

#[test]
fn compare_stationary_requires_level_constant_schemes() {
    // the fixture has two distinct scaling levels
    let out = run(&[
        "compare-stationary",
        "-c",
        fixture("bv_fractal.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("level-constant"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        r#"{
  "partition": {"uniform": {"intervals": 2, "domain": [0.0, 1.0]}},
  "germ": {"builtin": "parabola-bump"},
  "scaling": {"levels": [[{"constant": 0.5}, {"constant": -0.4}]]},
  "base": {"levels": [{"operator": "knot-pl"}]}
}"#,
    );
    let out = run(&["compare-stationary", "-c", cfg.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["agreement_pass"].as_bool().unwrap());
    assert!(report["norm_bound_pass"].as_bool().unwrap());
}

#[test]
fn bounds_pass_on_a_contractive_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        r#"{
  "partition": {"uniform": {"intervals": 3, "domain": [0.0, 1.0]}},
  "germ": {"builtin": "parabola-bump"},
  "scaling": {"levels": [[{"constant": 0.25}, {"constant": 0.2}, {"constant": -0.25}]]},
  "base": {"levels": [{"operator": "chord"}, {"operator": "knot-pl"}]},
  "seed": 7
}"#,
    );
    let out = run(&["bounds", "-c", cfg.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["pass"].as_bool().unwrap());
    assert!(report["contraction_condition_met"].as_bool().unwrap());
    assert!(report["neumann_pass"].as_bool().unwrap());
}

#[test]
fn evaluate_rejects_points_outside_the_domain() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        r#"{
  "partition": {"uniform": {"intervals": 2, "domain": [0.0, 1.0]}},
  "germ": {"builtin": "line"},
  "scaling": {"levels": [[{"constant": 0.3}, {"constant": 0.3}]]},
  "base": {"levels": [{"operator": "chord"}]},
  "evaluate": {"at": [0.25, 1.5]}
}"#,
    );
    let out = run(&["evaluate", "-c", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("outside the domain"));
}
