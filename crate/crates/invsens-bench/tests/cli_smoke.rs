//! End-to-end checks of the binary: exit codes, output files, and
//! byte-identical reruns.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_invsens-bench")
}

fn work_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("invsens-bench-smoke-{}-{tag}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn write_config(dir: &PathBuf, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

const MEDIAN_CONFIG: &str = r#"{
  "experiment": "median_sweep",
  "epsilons": [0.5, 1.0],
  "trials": 3,
  "seed": 9,
  "dataset_source": { "type": "synthetic_uniform", "n": 40, "low": 0.0, "high": 1.0 }
}"#;

#[test]
fn median_happy_path_writes_csv_and_sidecars() {
    let dir = work_dir("median");
    let config = write_config(&dir, "median.json", MEDIAN_CONFIG);
    let out = dir.join("results.csv");
    let out_s = out.to_str().unwrap();

    let res = run(&["median", "--config", &config, "--out", out_s]);
    assert_eq!(res.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&res.stderr));

    let csv = fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with('#'));
    assert_eq!(lines.next().unwrap(), "experiment,mechanism,epsilon,trial,seed,output,abs_error,wall_ms");
    // 2 epsilons x 3 trials x 3 mechanisms, every row with an empty wall_ms cell
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 18);
    assert!(rows.iter().all(|r| r.ends_with(',')));

    let summary = fs::read_to_string(dir.join("results.csv.summary.json")).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&summary).unwrap();
    assert_eq!(parsed.as_array().unwrap().len(), 6); // 3 mechanisms x 2 epsilons

    let times = fs::read_to_string(dir.join("results.csv.times.log")).unwrap();
    assert_eq!(times.lines().count(), 19); // header + one line per record
}

#[test]
fn rerun_with_same_config_is_byte_identical() {
    let dir = work_dir("rerun");
    let config = write_config(&dir, "median.json", MEDIAN_CONFIG);
    let (a, b) = (dir.join("a.csv"), dir.join("b.csv"));

    assert_eq!(run(&["median", "--config", &config, "--out", a.to_str().unwrap()]).status.code(), Some(0));
    assert_eq!(run(&["median", "--config", &config, "--out", b.to_str().unwrap()]).status.code(), Some(0));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    // a different seed must change the draws
    let c = dir.join("c.csv");
    assert_eq!(
        run(&["median", "--config", &config, "--out", c.to_str().unwrap(), "--seed", "10"]).status.code(),
        Some(0)
    );
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn config_errors_exit_2() {
    let dir = work_dir("badcfg");
    let empty = write_config(&dir, "empty_eps.json", r#"{ "experiment": "median_sweep", "epsilons": [] }"#);
    let res = run(&["median", "--config", &empty, "--out", dir.join("x.csv").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("epsilons"));

    let unknown = write_config(&dir, "unknown.json", r#"{ "experiment": "median_sweep", "epsilon": [0.1] }"#);
    let res = run(&["median", "--config", &unknown, "--out", dir.join("y.csv").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));

    let mismatch = write_config(&dir, "mismatch.json", r#"{ "experiment": "audit" }"#);
    let res = run(&["median", "--config", &mismatch, "--out", dir.join("z.csv").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));

    // missing required --out is a usage error, which clap also reports as 2
    let res = run(&["median"]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn infeasible_privacy_target_exits_3_after_emitting() {
    let dir = work_dir("infeasible");
    let config = write_config(
        &dir,
        "reg.json",
        r#"{
  "experiment": "regression_sweep",
  "epsilons": [0.05],
  "trials": 2,
  "seed": 4,
  "mh_steps": 40,
  "dataset_source": { "type": "synthetic_regression", "n": 60, "alpha": 1.0, "noise_half_width": 0.5, "x_half_width": 2.0 },
  "sgd": { "q": 0.05, "sigma": 2.0, "eta0_grid": [0.1] }
}"#,
    );
    let out = dir.join("reg.csv");
    let res = run(&["regression", "--config", &config, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&res.stderr).contains("infeasible"));

    let csv = fs::read_to_string(&out).unwrap();
    let sgd_rows: Vec<&str> = csv.lines().filter(|l| l.contains("private_sgd")).collect();
    assert_eq!(sgd_rows.len(), 2);
    // no output and no abs_error, so three consecutive empty cells end the row
    assert!(sgd_rows.iter().all(|r| r.ends_with(",,,")));
    assert!(csv.lines().any(|l| l.contains("inverse_sensitivity_mh")));
}

#[test]
fn audit_writes_records_and_prints_verdicts() {
    let dir = work_dir("audit");
    let config = write_config(
        &dir,
        "audit.json",
        r#"{
  "experiment": "audit",
  "epsilons": [1.0],
  "trials": 5,
  "seed": 2,
  "dataset_source": { "type": "synthetic_uniform", "n": 12, "low": 0.0, "high": 1.0 }
}"#,
    );
    let out = dir.join("audit.json.out");
    let res = run(&["audit", "--config", &config, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&res.stderr));

    let stdout = String::from_utf8_lossy(&res.stdout);
    assert!(stdout.contains("lipschitz_audit(finite_median)"));
    assert!(stdout.contains("density_ratio_audit(inverse_sensitivity_median"));

    let records: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let records = records.as_array().unwrap();
    assert_eq!(records.len(), 1);
    assert_eq!(records[0]["pass"], serde_json::Value::Bool(true));
}

#[test]
fn step_figure_emits_interval_endpoints() {
    let dir = work_dir("stepfig");
    let config = write_config(
        &dir,
        "step.json",
        r#"{
  "experiment": "step_figure",
  "epsilons": [0.5],
  "seed": 0,
  "step_width": 25,
  "dataset_source": { "type": "synthetic_uniform", "n": 100, "low": 0.0, "high": 1.0 }
}"#,
    );
    let out = dir.join("step.csv");
    let res = run(&["step-figure", "--config", &config, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0));

    let csv = fs::read_to_string(&out).unwrap();
    // s = 0..=100, four records each: lo/hi per mechanism
    assert_eq!(csv.lines().count(), 2 + 101 * 4);
    assert!(csv.contains("inverse_sensitivity:lo"));
    assert!(csv.contains("smooth_laplace:hi"));
}
