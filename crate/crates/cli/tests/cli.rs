//! End-to-end checks of the runner: artifacts, determinism, exit codes,
//! and error propagation into the summary.

use std::fs;
use std::path::Path;
use std::process::Command;

use tevd_cli::config::parse_config;
use tevd_cli::output::SPECTRUM_HEADER;
use tevd_cli::runner::{self, EXIT_FATAL, EXIT_OK, EXIT_PARTIAL};

fn small_waveguide(extra: &str) -> String {
    let mut cfg = String::from("mode = waveguide\nW_over_lambda = 5.5\nN_x = 128\n");
    if !extra.contains("L_over_ell") {
        cfg.push_str("L_over_ell = 0.5\n");
    }
    if !extra.contains("T_count") {
        cfg.push_str("T_count = 7\n");
    }
    cfg.push_str(extra);
    cfg
}

#[test]
fn solve_writes_stable_deterministic_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config(&small_waveguide("")).unwrap();

    let out1 = dir.path().join("run1");
    let outcome = runner::run(&cfg, &out1);
    assert_eq!(outcome.exit_code, EXIT_OK);
    let csv1 = fs::read(out1.join("spectrum.csv")).unwrap();
    let text = String::from_utf8(csv1.clone()).unwrap();
    assert_eq!(text.lines().next().unwrap(), SPECTRUM_HEADER);
    assert_eq!(text.lines().count(), 8); // header + 7 points

    let out2 = dir.path().join("run2");
    runner::run(&cfg, &out2);
    let csv2 = fs::read(out2.join("spectrum.csv")).unwrap();
    assert_eq!(csv1, csv2, "re-running the same config must be byte-identical");

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out1.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["status"], "ok");
    assert_eq!(summary["failed_points"], 0);
    assert!(summary["invariants"].as_array().unwrap().iter().all(|c| c["pass"] == true));
    assert!(summary["points"].as_array().unwrap().len() == 7);
}

#[test]
fn runtime_failure_reaches_the_summary() {
    // The config loads fine; the solver failure surfaces in summary.json
    // with a fatal exit, not a crash.
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config(
        "mode = saddle1d\nL_over_lambda = 6\nL_over_ell = 2\nmax_iter = 2\n",
    )
    .unwrap();
    let outcome = runner::run(&cfg, dir.path());
    assert_eq!(outcome.exit_code, EXIT_FATAL);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["status"], "failed");
    assert!(
        summary["error"].as_str().unwrap().contains("did not converge"),
        "summary error: {}",
        summary["error"]
    );
}

#[test]
fn nonconverged_points_yield_partial_exit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config(&small_waveguide("max_iter = 2\nL_over_ell = 2\n")).unwrap();
    let outcome = runner::run(&cfg, dir.path());
    assert_eq!(outcome.exit_code, EXIT_PARTIAL);
    assert!(outcome.summary.failed_points > 0);
    // Failed rows are flagged in the CSV, not dropped.
    let text = fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    assert_eq!(text.lines().count(), 8);
    assert!(text.contains("nan"));
}

#[test]
fn quasiballistic_and_slab_modes_produce_tables() {
    let dir = tempfile::tempdir().unwrap();
    let qb_cfg = parse_config(
        "mode = quasiballistic\nW_over_lambda = 5.5\nL_over_ell = 0.3\nT_count = 9\n",
    )
    .unwrap();
    let outcome = runner::run(&qb_cfg, dir.path());
    assert_eq!(outcome.exit_code, EXIT_OK);
    assert!(dir.path().join("spectrum.csv").exists());

    let slab_cfg = parse_config(
        "mode = slab\nN_mu = 16\nL_over_ell = 0.3\nT_count = 3\nN_x = 128\n",
    )
    .unwrap();
    let out2 = dir.path().join("slab");
    let outcome = runner::run(&slab_cfg, &out2);
    assert_eq!(outcome.exit_code, EXIT_OK);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out2.join("summary.json")).unwrap()).unwrap();
    let names: Vec<&str> = summary["invariants"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(names.contains(&"quadrature_norm_kappa0"));
    assert!(names.contains(&"current_conservation"));
}

#[test]
fn saddle1d_mode_writes_qtrace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config(
        "mode = saddle1d\nL_over_lambda = 6\nL_over_ell = 2\nvarsigma_over_L = 0.02\n\
         tol = 1e-9\nmax_iter = 500\n",
    )
    .unwrap();
    let outcome = runner::run(&cfg, dir.path());
    assert_eq!(outcome.exit_code, EXIT_OK);
    let text = fs::read_to_string(dir.path().join("qtrace.csv")).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "x_over_lambda,Q11_re,Q11_im,Q12_re,Q12_im,Q21_re,Q21_im"
    );
    assert!(outcome.summary.oscillation_metric.is_some());
}

#[test]
fn binary_subcommands_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.cfg");
    fs::write(&cfg_path, small_waveguide("T_count = 3\n")).unwrap();
    let bin = env!("CARGO_BIN_EXE_tevd");

    let check = Command::new(bin).args(["check", "--config"]).arg(&cfg_path).output().unwrap();
    assert!(check.status.success(), "{}", String::from_utf8_lossy(&check.stderr));

    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "mode = slab\n").unwrap();
    let check = Command::new(bin).args(["check", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(check.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&check.stderr).contains("N_mu"));

    let inv = Command::new(bin)
        .args(["invariants", "--config"])
        .arg(&cfg_path)
        .output()
        .unwrap();
    assert!(inv.status.success(), "{}", String::from_utf8_lossy(&inv.stderr));
    let stdout = String::from_utf8_lossy(&inv.stdout);
    assert!(stdout.contains("PASS current_conservation"), "{stdout}");

    let solve = Command::new(bin)
        .args(["solve", "--threads", "2", "--config"])
        .arg(&cfg_path)
        .args(["--output-dir"])
        .arg(dir.path().join("out").as_os_str())
        .output()
        .unwrap();
    assert!(solve.status.success(), "{}", String::from_utf8_lossy(&solve.stderr));
    assert!(dir.path().join("out/spectrum.csv").exists());
    assert!(dir.path().join("out/summary.json").exists());
}

#[test]
fn config_echo_round_trips_into_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config(&small_waveguide("convention = a_only\n")).unwrap();
    runner::run(&cfg, dir.path());
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["config"]["convention"], "a_only");
    assert_eq!(summary["config"]["w_over_lambda"], 5.5);
    assert_eq!(summary["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn qtrace_path_helper_exists() {
    // Keep the documented artifact names stable.
    assert_eq!(SPECTRUM_HEADER, "T,gamma_re,gamma_im,F_re,F_im,rho,iters,residual");
    let _ = Path::new("spectrum.csv");
}
