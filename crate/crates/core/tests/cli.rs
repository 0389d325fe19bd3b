use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_proper-regret")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn modulus_csv_header_and_rows() {
    let o = run(&["modulus", "--family", "log", "--r", "0:2:0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    let mut lines = s.lines();
    assert_eq!(lines.next(), Some("r,omega,method,heuristic"));
    let last: Vec<&str> = s.lines().last().unwrap().split(',').collect();
    let omega: f64 = last[1].parse().unwrap();
    assert!((omega - std::f64::consts::LN_2).abs() < 1e-15);
    assert_eq!(s.lines().count(), 6);
    assert!(!s.contains('\r'));
}

#[test]
fn both_mode_reports_discrepancy() {
    let o = run(&["modulus", "--family", "brier", "--method", "both", "--r", "0.5,1,diam"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.starts_with("r,omega,method,heuristic,closed_form,abs_diff\n"));
    for line in s.lines().skip(1) {
        let diff: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(diff < 1e-9, "{line}");
    }
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["modulus", "--family", "alpha-norm", "--alpha", "1.5"]).status.code(), Some(2));
    assert_eq!(run(&["modulus", "--family", "tsallis"]).status.code(), Some(2));
    assert_eq!(run(&["modulus", "--r", "0:3:0.5"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "nonsense"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "downstream", "--task", "regression"]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn brute_force_only_family_runs_with_brute() {
    let o = run(&["modulus", "--family", "alpha-norm", "--alpha", "1.5", "--method", "brute", "--r", "0.5,1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("brute_force"));
}

#[test]
fn order_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("order.csv");
    let o = run(&["order", "--family", "shannon", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("r,omega,sigma,K\n"));
    assert_eq!(csv.lines().count(), 201);
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("order.summary.json")).unwrap()).unwrap();
    assert_eq!(summary["pass"], true);
    assert_eq!(summary["statistic"], "liminf");
}

#[test]
fn counterexample_order_passes() {
    let o = run(&["order", "--family", "counterexample", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["summary"]["max_sigma_small_r"].as_f64().unwrap() >= 1.95);
}

#[test]
fn verify_reports_are_json() {
    for suite in ["properness", "savage", "affine", "strong"] {
        let o = run(&["verify", suite, "--family", "shannon", "--samples", "500"]);
        assert_eq!(o.status.code(), Some(0), "{suite}");
        let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(v["suite"], suite);
    }
}

#[test]
fn strong_violation_exits_one_with_witness() {
    let o = run(&["verify", "strong", "--family", "brier", "--kappa", "3", "--samples", "500"]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["report"]["pass"], false);
    assert!(v["report"]["worst_witness"]["q"].is_array());
}

#[test]
fn table1_passes() {
    let o = run(&["table1"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.starts_with("family,alpha,branch,points,max_abs_diff,status\n"));
    assert!(s.contains("alpha-norm,1.5,alpha<2,40,,brute_force_only"));
    assert!(!s.contains(",fail"));
}
