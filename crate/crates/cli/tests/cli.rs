use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use approx::assert_relative_eq;
use subrep_cli::report::read_csv;
use subrep_core::CheckReport;

fn subrep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_subrep"))
        .args(args)
        .env_remove("SUBREP_THREADS")
        .output()
        .expect("spawn subrep")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn scalar(o: &Output) -> f64 {
    assert!(o.status.success(), "{}", stderr(o));
    stdout(o).split_whitespace().next().unwrap().parse().unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let out = dir.join("out");
    let text = format!("{body}\n[output]\ndir = {:?}\nformats = [\"json\", \"csv\"]\n", out.display().to_string());
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn list_checks_names_every_check() {
    let o = subrep(&["list-checks"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 13);
    for id in ["subrepresentation_identity", "bbm_limit", "hedberg_split", "lower_ahlfors_counterexample"] {
        assert!(text.contains(id), "{id} missing");
    }
}

#[test]
fn empty_check_list_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "dimension = 2\nchecks = []\n");
    let o = subrep(&["run", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["total"], 0);
}

#[test]
fn bbm_limit_config_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "dimension = 2\nchecks = [\"check_bbm_limit\"]\n");
    let o = subrep(&["run", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let report: CheckReport =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/bbm_limit.json")).unwrap()).unwrap();
    assert!(report.pass);
    let entries = fs::read_dir(dir.path().join("out")).unwrap().count();
    assert_eq!(entries, 3, "json, csv and summary");
}

#[test]
fn failing_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "dimension = 2\nchecks = [\"bbm_limit\"]\n[bbm]\nalphas = [0.9, 0.5]\n");
    let o = subrep(&["run", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn out_of_range_alpha_exits_two_and_names_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "dimension = 2\nchecks = [\"lemma_domination\"]\nalphas = [1.5]\n");
    let o = subrep(&["run", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("alphas[0]"), "{err}");
    assert!(err.contains("line 3"), "{err}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn unknown_key_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "dimension = 2\nchekcs = []\n");
    let o = subrep(&["run", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn reports_are_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "dimension = 2\nchecks = [\"beta_identity\", \"annuli_absorption\", \"bbm_limit\"]\n",
    );
    let read = |name: &str| fs::read(dir.path().join("out").join(name)).unwrap();
    assert!(subrep(&["run", &cfg]).status.success());
    let first: Vec<Vec<u8>> = ["beta_identity.json", "annuli_absorption.json", "bbm_limit.json"]
        .iter()
        .map(|n| read(n))
        .collect();
    let o = Command::new(env!("CARGO_BIN_EXE_subrep"))
        .args(["run", &cfg])
        .env("SUBREP_THREADS", "1")
        .output()
        .unwrap();
    assert!(o.status.success());
    for (name, bytes) in ["beta_identity.json", "annuli_absorption.json", "bbm_limit.json"].iter().zip(&first) {
        assert_eq!(&read(name), bytes, "{name} changed between runs");
    }
}

#[test]
fn csv_and_json_hold_the_same_records() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "dimension = 2\nchecks = [\"bbm_limit\", \"lower_ahlfors_counterexample\"]\n");
    assert!(subrep(&["run", &cfg]).status.success());
    for id in ["bbm_limit", "lower_ahlfors_counterexample"] {
        let json: CheckReport =
            serde_json::from_str(&fs::read_to_string(dir.path().join(format!("out/{id}.json"))).unwrap()).unwrap();
        let rows = read_csv(&dir.path().join(format!("out/{id}.csv"))).unwrap();
        assert_eq!(rows.len(), json.samples.len());
        for (row, s) in rows.iter().zip(&json.samples) {
            assert_eq!(&row.to_sample(), s);
        }
    }
}

#[test]
fn bad_thread_env_exits_two() {
    let o = Command::new(env!("CARGO_BIN_EXE_subrep"))
        .args(["list-checks"])
        .env("SUBREP_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn eval_riesz_of_zero_is_zero() {
    assert_eq!(scalar(&subrep(&["eval", "riesz", "--amplitude", "0"])), 0.0);
}

#[test]
fn eval_tw_with_unit_weight_matches_scaled_riesz() {
    let x = "0.3,-0.2";
    let tw = scalar(&subrep(&["eval", "tw", "--alpha", "1", "--x", x]));
    let riesz = scalar(&subrep(&["eval", "riesz", "--alpha", "1", "--x", x]));
    assert_relative_eq!(tw, riesz / std::f64::consts::PI, max_relative = 1e-12);
}

#[test]
fn eval_frac_derivative_matches_fixture() {
    let fixture: serde_json::Value =
        serde_json::from_str(include_str!("fixtures/frac_derivative_centre.json")).unwrap();
    let v = scalar(&subrep(&["eval", "frac_derivative", "--alpha", "0.5"]));
    let expected = fixture["value"].as_f64().unwrap();
    assert_relative_eq!(v, expected, max_relative = fixture["rel_tol"].as_f64().unwrap());
}

#[test]
fn eval_rejects_bad_parameters() {
    assert_eq!(subrep(&["eval", "riesz", "--alpha", "3"]).status.code(), Some(2));
    assert_eq!(subrep(&["eval", "tw", "--weight", "nope"]).status.code(), Some(2));
    assert!(!subrep(&["eval", "unknown_op"]).status.success());
}
