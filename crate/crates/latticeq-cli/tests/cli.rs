//! End-to-end tests against the built binary: spec'd exit codes, output
//! shapes, config precedence, and the documented example invocations.

use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_latticeq"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin()
        .args(args)
        .args(["--out", dir.to_str().unwrap()])
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "expected success, got {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON report")
}

fn complex_of(v: &Value) -> (f64, f64) {
    let arr = v.as_array().expect("complex as [re, im]");
    (arr[0].as_f64().unwrap(), arr[1].as_f64().unwrap())
}

#[test]
fn eval_gaussian_at_seam_point_is_minus_one() {
    let out = run(&["eval", "exp(-pi*i*k^2/n)", "--n", "4", "--at", "2"]);
    let report = stdout_json(&out);
    let (re, im) = complex_of(&report["rows"][0]["value"]);
    assert!(
        (re + 1.0).abs() < 1e-15 && im.abs() < 1e-15,
        "e^(-pi*i*4/4) must be exactly -1, got ({re}, {im})"
    );
    assert_eq!(report["sign_ledger_version"], "SL-1");
    assert_eq!(report["params"]["classified"], "gaussian");
}

#[test]
fn eval_with_parameter_matches_exact_phase() {
    let out = run(&[
        "eval",
        "exp(-pi*i*(3/2*k^2 + 2*k*p1)/n)",
        "--n",
        "12",
        "--at",
        "2",
        "--param",
        "3",
    ]);
    let report = stdout_json(&out);
    let (re, im) = complex_of(&report["rows"][0]["value"]);
    assert!(
        re.abs() < 1e-15 && (im - 1.0).abs() < 1e-15,
        "e^(-3*pi*i/2) must be exactly i, got ({re}, {im})"
    );
}

#[test]
fn eval_odd_n_exits_3() {
    let out = run(&["eval", "exp(-pi*i*k^2/n)", "--n", "5", "--at", "1"]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("even"), "error names the condition: {err}");
}

#[test]
fn eval_point_out_of_range_exits_3_with_range_message() {
    let out = run(&["eval", "exp(-pi*i*k^2/n)", "--n", "4", "--at", "7"]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("range") && err.contains("7"),
        "error names the point and range: {err}"
    );
}

#[test]
fn eval_parse_error_exits_2() {
    let out = run(&["eval", "exp(-pi*i*k^^2/n)", "--n", "4", "--at", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("parse"));
}

#[test]
fn global_quantifier_gives_eighth_root_phase() {
    let out = run(&["quantify", "exp(-pi*i*k^2/n)", "--global", "--n", "720720"]);
    let report = stdout_json(&out);
    let (re, im) = complex_of(&report["rows"][0]["result"]["value"]);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    assert!(
        (re - r).abs() < 1e-8 && (im + r).abs() < 1e-8,
        "global sum must be close to e^(-i*pi/4), got ({re}, {im})"
    );
}

#[test]
fn windowed_quantifier_approximates_gauss_integral() {
    let out = run(&[
        "quantify",
        "exp(-x^2)",
        "--window",
        "-4",
        "4",
        "--n",
        "1e6",
    ]);
    let report = stdout_json(&out);
    let (re, im) = complex_of(&report["rows"][0]["result"]["value"]);
    assert!(
        (re - 1.7724538).abs() < 1e-3 && im.abs() < 1e-12,
        "windowed sum of exp(-x^2) must be near 1.77245, got ({re}, {im})"
    );
}

#[test]
fn non_divisible_period_exits_3_naming_the_condition() {
    let out = run(&[
        "quantify",
        "exp(-pi*i*3/2*k^2/n)",
        "--global",
        "--n",
        "1000000",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("divide"), "error names divisibility: {err}");
}

#[test]
fn cost_guard_refuses_above_ceiling() {
    let out = run(&[
        "quantify",
        "exp(-pi*i*k^2/n)",
        "--global",
        "--n",
        "720720",
        "--cost-ceiling",
        "500000",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("720720") && err.contains("500000"),
        "guard names the estimate and the ceiling: {err}"
    );
}

#[test]
fn local_sequence_emits_every_admissible_window() {
    let out = run(&["quantify", "exp(-pi*i*k^2/n)", "--local", "--n", "10000"]);
    let report = stdout_json(&out);
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 19, "n=10^4 admits windows m = 1..19");
    assert_eq!(rows[0]["m"], 1);
    assert_eq!(rows[18]["m"], 19);
}

#[test]
fn verify_gauss_passes_and_writes_both_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["verify", "gauss", "--a", "1", "--b", "0", "--n", "1441440"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json_path = dir.path().join("verify-gauss.json");
    let csv_path = dir.path().join("verify-gauss.csv");
    assert!(json_path.exists() && csv_path.exists());
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(json_path).unwrap()).unwrap();
    assert_eq!(report["pass"], true);
    assert_eq!(report["sign_ledger_version"], "SL-1");
}

#[test]
fn verify_unknown_suite_exits_3() {
    let out = run(&["verify", "bogus"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn plotdata_converge_emits_n_error_csv() {
    // The decay-exponent fit needs the full x4 ladder: on short ladders the
    // per-n errors are dominated by lattice-window alignment noise and the
    // suite honestly reports the fit failure.
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "verify",
            "converge",
            "--n-list",
            "1e4..2.56e6",
            "--quantity",
            "gaussian-norm",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = dir.path().join("verify-converge.json");
    let plot = run(&["plotdata", report.to_str().unwrap()]);
    assert!(plot.status.success());
    let text = String::from_utf8(plot.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,abs_error"));
    let first = lines.next().expect("one data row per n");
    assert!(first.starts_with("10000,"), "row starts with n: {first}");
    assert_eq!(text.lines().count(), 1 + 5, "header plus the five ladder sizes");
}

#[test]
fn plotdata_missing_report_exits_4() {
    let out = run(&["plotdata", "/nonexistent/report.json"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "n=4\nhn=1\n# comment\nformat=json\n").unwrap();
    let from_config = stdout_json(&run(&[
        "eval",
        "exp(-pi*i*k^2/n)",
        "--at",
        "2",
        "--config",
        cfg.to_str().unwrap(),
    ]));
    assert_eq!(from_config["params"]["config"]["n"], 4);

    let flag_wins = stdout_json(&run(&[
        "eval",
        "exp(-pi*i*k^2/n)",
        "--at",
        "2",
        "--n",
        "8",
        "--config",
        cfg.to_str().unwrap(),
    ]));
    assert_eq!(flag_wins["params"]["config"]["n"], 8);
}

#[test]
fn config_unknown_key_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    std::fs::write(&cfg, "n=4\nbogus=1\n").unwrap();
    let out = run(&["universe-info", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
}

#[test]
fn universe_info_reports_derived_constants() {
    let report = stdout_json(&run(&["universe-info", "--n", "1000000"]));
    let row = &report["rows"][0];
    assert_eq!(row["max_local_window"], 199);
    let delta = row["spacing"].as_f64().unwrap();
    let expect = (2.0 * std::f64::consts::PI / 1.0e6).sqrt();
    assert!((delta - expect).abs() < 1e-15);
}

#[test]
fn csv_format_flag_renders_rows() {
    let out = run(&[
        "eval",
        "exp(-pi*i*k^2/n)",
        "--n",
        "4",
        "--at",
        "0",
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("k,"), "CSV header first: {text}");
}

#[test]
fn anharmonic_example_cell_is_red_with_exact_identity() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "verify",
            "anharmonic",
            "--H",
            "1e4",
            "--L",
            "auto",
            "--lambda-h",
            "0.01",
        ],
    );
    // The first-order budget sits below the theory's own second-order
    // term, so this cell reports a failure honestly (see README).
    assert_eq!(out.status.code(), Some(1));
    let report: Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("verify-anharmonic.json")).unwrap(),
    )
    .unwrap();
    let row = &report["rows"][0];
    assert!(row["identity_residual"].as_f64().unwrap() < 1e-12);
    assert!(row["t0_closed_residual"].as_f64().unwrap() < 1e-8);
}

#[test]
fn sweep_suites_take_lists_through_n_flag() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["verify", "weyl", "--n", "16,64", "--trials", "2"],
    );
    assert!(out.status.success(), "weyl over --n list should pass");
    let report: Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("verify-weyl.json")).unwrap(),
    )
    .unwrap();
    let ns: Vec<u64> = report["rows"]
        .as_array()
        .unwrap()
        .iter()
        .filter_map(|r| r["n"].as_u64())
        .collect();
    assert_eq!(ns, vec![16, 64], "--n accepts a comma list for sweeps");
    assert_eq!(
        report["params"]["config"]["n"], "16,64",
        "list specs echo verbatim"
    );
}
