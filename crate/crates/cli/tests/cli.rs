use std::process::{Command, Output};

use friendsim::Error;
use friendsim_cli::{run, Failure, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE};
use serde_json::Value;

fn friendsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_friendsim")).args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let mut full = args.to_vec();
    full.extend(["--format", "json"]);
    let out = friendsim(&full);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn code(args: &[&str]) -> i32 {
    run(std::iter::once("friendsim").chain(args.iter().copied()))
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&["no-such-command"]), EXIT_USAGE);
    assert_eq!(code(&["epr-undo", "--angles", "0,45,90"]), EXIT_USAGE);
    assert_eq!(code(&["epr-undo", "--angles", "0,45,x,135"]), EXIT_USAGE);
    assert_eq!(code(&["epr-undo", "--trials", "10000001"]), EXIT_USAGE);
    assert_eq!(code(&["epr-undo", "--mode", "sideways"]), EXIT_USAGE);
    assert_eq!(code(&["fr", "--zeus", "off", "--observe", "z=OK,w=OK"]), EXIT_USAGE);
    assert_eq!(code(&["fr", "--zeus", "on", "--observe", "w=OK,w=fail"]), EXIT_USAGE);
    assert_eq!(code(&["fine-check", "--corr", "0,0,0,1.5"]), EXIT_USAGE);
    assert_eq!(code(&["brukner", "--variant", "nope"]), EXIT_USAGE);
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(friendsim(&["--help"]).status.code(), Some(EXIT_OK));
    assert_eq!(friendsim(&["--version"]).status.code(), Some(EXIT_OK));
    assert_eq!(friendsim(&["no-such-command"]).status.code(), Some(EXIT_USAGE));
}

#[test]
fn numerical_errors_exit_two() {
    assert_eq!(Failure::from(Error::Numerical("diverged".into())).exit_code(), EXIT_NUMERICAL);
    assert_eq!(Failure::from(Error::Config("bad".into())).exit_code(), EXIT_USAGE);
}

#[test]
fn fr_audit_reports_contradiction() {
    let on = json(&["fr", "--zeus", "on", "--audit"]);
    assert_eq!(on["schema_version"], "friendsim-report/1");
    assert_eq!(on["results"]["contradiction"], true);
    assert_eq!(on["all_passed"], true);
    let off = json(&["fr", "--zeus", "off", "--observe", "w=OK"]);
    assert_eq!(off["results"]["contradiction"], false);
    let app = json(&["fr", "--zeus", "on", "--appendix"]);
    assert_eq!(app["all_passed"], true);
}

#[test]
fn epr_undo_default_chsh() {
    let d = json(&["epr-undo"]);
    let chsh = d["results"]["analytic"]["chsh"].as_f64().unwrap();
    assert!((chsh + 2.0 * 2f64.sqrt()).abs() <= 1e-9, "{chsh}");
    assert_eq!(d["all_passed"], true);
    let r = json(&["epr-undo", "--angles", "0,0.7853981633974483,1.5707963267948966,2.356194490192345", "--unit", "rad"]);
    assert!((r["results"]["analytic"]["chsh"].as_f64().unwrap() - chsh).abs() <= 1e-12);
}

#[test]
fn fine_check_decisions() {
    let ok = json(&["fine-check", "--corr", "0,0,0,0"]);
    assert_eq!(ok["results"]["feasible"], true);
    assert_eq!(ok["all_passed"], true);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let corr = format!("{},{},{},{}", -h, -h, -h, h);
    let bad = json(&["fine-check", "--corr", &corr]);
    assert_eq!(bad["results"]["feasible"], false);
    let v = bad["results"]["violated_value"].as_f64().unwrap();
    assert!((v - 2.0 * 2f64.sqrt()).abs() <= 1e-9);
    assert!(bad["results"]["farkas"]["value"].as_f64().unwrap() > 0.0);
}

#[test]
fn out_file_and_trial_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let records = dir.path().join("records.csv");
    let o = friendsim(&[
        "epr-undo",
        "--mode",
        "collapse",
        "--trials",
        "500",
        "--seed",
        "3",
        "--records",
        records.to_str().unwrap(),
        "--format",
        "json",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["all_passed"], true);
    let csv = std::fs::read_to_string(&records).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("trial,pair_or_full,out_a,out_b,out_c,out_d"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 500);
    assert!(rows[0].starts_with("0,full,"));

    // Unitary mode, CSV to stdout: one row per (pair, trial), two slots filled.
    let t = friendsim(&["epr-undo", "--trials", "10", "--format", "csv"]);
    let text = String::from_utf8(t.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 40);
    for r in &rows {
        let fields: Vec<&str> = r.split(',').collect();
        assert_eq!(fields.len(), 6);
        assert_eq!(fields[2..].iter().filter(|f| !f.is_empty()).count(), 2, "{r}");
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let args = ["epr-undo", "--mode", "collapse", "--trials", "1000", "--seed", "9", "--format", "csv"];
    assert_eq!(friendsim(&args).stdout, friendsim(&args).stdout);
    let j = ["epr-undo", "--trials", "1000", "--format", "json"];
    assert_eq!(friendsim(&j).stdout, friendsim(&j).stdout);
}

#[test]
fn table_and_csv_reports_render() {
    let t = friendsim(&["brukner"]);
    assert_eq!(t.status.code(), Some(0));
    let text = String::from_utf8(t.stdout).unwrap();
    assert!(text.contains("PASS"));
    assert!(!text.contains("FAIL"));
    let c = friendsim(&["fr", "--zeus", "on", "--format", "csv"]);
    let text = String::from_utf8(c.stdout).unwrap();
    assert!(text.starts_with("section,key,value,expected,tolerance,pass"));
}
