//! End-to-end tests of the command-line surface: exit codes, JSON error
//! reporting, output determinism, and file formats.

use assert_cmd::Command;
use predicates::prelude::*;

fn eqport() -> Command {
    Command::cargo_bin("eqport").unwrap()
}

#[test]
fn solve_reports_unique_regime() {
    eqport()
        .args([
            "solve",
            "--dist",
            "poisson:theta=2",
            "--market",
            "const:lambda=0.4,sigma=0.2,T=20",
            "--grid",
            "100",
        ])
        .assert()
        .success()
        .stdout(predicate::str::contains("UniqueFinite"));
}

#[test]
fn solve_trivial_regime_exits_zero() {
    eqport()
        .args([
            "solve",
            "--dist",
            "stable:alpha=0.4",
            "--market",
            "const:lambda=1,sigma=1,T=1",
        ])
        .assert()
        .success()
        .stdout(predicate::str::contains("TrivialOnly"));
}

#[test]
fn curve_csv_has_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("curve.csv");
    eqport()
        .args([
            "solve",
            "--dist",
            "gamma:alpha=2,beta=0.5",
            "--market",
            "const:lambda=0.4,sigma=0.2,T=20",
            "--grid",
            "50",
            "--out",
            path.to_str().unwrap(),
        ])
        .assert()
        .success();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("t,v,a_1,pi_1,J0\n"));
    assert_eq!(text.lines().count(), 51);
}

#[test]
fn precondition_failure_exits_two_with_json_stderr() {
    eqport()
        .args([
            "crossing",
            "--r0",
            "1",
            "--delta1",
            "1",
            "--delta2",
            "1",
            "--p1",
            "0.9",
            "--p2",
            "0.9",
            "--market",
            "const:lambda=0.4,sigma=0.2,T=20",
        ])
        .assert()
        .code(2)
        .stderr(predicate::str::contains("\"schema\":\"eqport.error/1\""))
        .stderr(predicate::str::contains("\"kind\":\"precondition\""));
}

#[test]
fn parse_error_exits_two() {
    eqport()
        .args([
            "solve",
            "--dist",
            "gauss:mu=1",
            "--market",
            "const:lambda=0.4,sigma=0.2,T=20",
        ])
        .assert()
        .code(2)
        .stderr(predicate::str::contains("unknown family"));
}

#[test]
fn identical_argv_gives_identical_bytes() {
    let run = || {
        eqport()
            .args([
                "verify",
                "--dist",
                "poisson:theta=2",
                "--market",
                "const:lambda=0.4,sigma=0.2,T=20",
                "--grid",
                "60",
                "--paths",
                "10000",
                "--seed",
                "42",
                "--directions",
                "5",
                "--times",
                "2",
                "--json",
            ])
            .env("EQPORT_THREADS", "2")
            .assert()
            .success()
            .get_output()
            .stdout
            .clone()
    };
    assert_eq!(run(), run());
}

#[test]
fn fig1_json_contains_crossing() {
    eqport()
        .args(["fig1", "--json"])
        .assert()
        .success()
        .stdout(predicate::str::contains("\"t_star\":8.18567615"))
        .stdout(predicate::str::contains("\"fsd\":\"Dominates\""));
}

#[test]
fn fig2_reports_reversal_region() {
    eqport()
        .args(["fig2", "--json"])
        .assert()
        .success()
        .stdout(predicate::str::contains("\"exceeds_all_points\""))
        .stdout(predicate::str::is_match("\"exceeds_all_points\":[1-9]").unwrap());
}

#[test]
fn config_file_overrides_are_applied_and_checked() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.cfg");
    std::fs::write(&good, "grid_points = 40\nquad_rel = 1e-9 # comment\n").unwrap();
    let out = dir.path().join("c.csv");
    eqport()
        .args([
            "solve",
            "--config",
            good.to_str().unwrap(),
            "--dist",
            "poisson:theta=2",
            "--market",
            "const:lambda=0.4,sigma=0.2,T=20",
            "--out",
            out.to_str().unwrap(),
        ])
        .assert()
        .success();
    // 40 grid points plus the header line
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 41);

    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "no_such_key = 1\n").unwrap();
    eqport()
        .args([
            "solve",
            "--config",
            bad.to_str().unwrap(),
            "--dist",
            "poisson:theta=2",
            "--market",
            "const:lambda=0.4,sigma=0.2,T=20",
        ])
        .assert()
        .code(2)
        .stderr(predicate::str::contains("unknown config key"));
}

#[test]
fn piecewise_market_csv_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let mkt = dir.path().join("market.csv");
    std::fs::write(&mkt, "t_start,lambda_1,sigma_11\n0,1,1\n1,0,1\n2,1,1\n3,,\n").unwrap();
    eqport()
        .args([
            "solve",
            "--dist",
            "point:2",
            "--market",
            &format!("piecewise:file={}", mkt.display()),
            "--grid",
            "30",
        ])
        .assert()
        .success()
        .stdout(predicate::str::contains("Lambda(0) = 2"));
}

#[test]
fn sweep_crossing_traces_monotone_direction() {
    eqport()
        .args([
            "sweep-crossing",
            "--r0",
            "1",
            "--delta1",
            "2",
            "--delta2",
            "1",
            "--p1",
            "0.9",
            "--p2",
            "0.9",
            "--which",
            "both",
            "--p-grid",
            "0.85,0.9",
            "--market",
            "const:lambda=0.4,sigma=0.2,T=20",
            "--json",
        ])
        .assert()
        .success()
        .stdout(predicate::str::contains("\"command\":\"sweep-crossing\""));
}
