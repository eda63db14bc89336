//! Black-box tests of the `crossmoment` binary: exit codes, CSV piping,
//! determinism, and the manifest side channel.

use std::io::Write;
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_crossmoment"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn run_with_stdin(args: &[&str], input: &str) -> Output {
    let mut child = bin()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .as_mut()
        .unwrap()
        .write_all(input.as_bytes())
        .unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn simulate_row_count_and_determinism() {
    let args = [
        "simulate",
        "--n",
        "5",
        "--seed",
        "1",
        "--family",
        "exponential",
        "--random-params",
    ];
    let a = run(&args);
    assert!(a.status.success());
    let csv = stdout(&a);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("z,d,y"));
    assert_eq!(lines.count(), 5);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn simulate_manifest_json_line() {
    let a = run(&["simulate", "--n", "3", "--seed", "9", "--random-params"]);
    let manifest = String::from_utf8(a.stderr.clone()).unwrap();
    let v: serde_json::Value = serde_json::from_str(manifest.lines().next().unwrap()).unwrap();
    assert_eq!(v["subcommand"], "simulate");
    assert_eq!(v["seed"], 9);
    assert_eq!(v["rng_algorithm"], "ChaCha8");
}

#[test]
fn usage_error_exits_1() {
    let out = run(&["estimate", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["no-such-subcommand"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn alpha_z_zero_rejected() {
    let out = run(&["simulate", "--n", "5", "--seed", "1", "--alpha-z", "0"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("alpha_z"), "{err}");
}

fn simulate_params_a(n: &str) -> String {
    let out = run(&[
        "simulate", "--n", n, "--seed", "12", "--alpha-z", "1", "--alpha-d", "2", "--beta",
        "1", "--gamma", "0.5", "--vars", "1,1,1,1",
    ]);
    assert!(out.status.success());
    stdout(&out)
}

#[test]
fn estimate_cross_moment_and_did_on_params_a() {
    let csv = simulate_params_a("1000000");

    let out = run_with_stdin(&["estimate", "--method", "cross_moment"], &csv);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let beta: f64 = text
        .lines()
        .find(|l| l.starts_with("beta_hat,"))
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!((beta - 1.0).abs() < 0.1, "beta_hat = {beta}");

    let out = run_with_stdin(&["estimate", "--method", "did"], &csv);
    assert!(out.status.success());
    let beta: f64 = stdout(&out)
        .lines()
        .find(|l| l.starts_with("beta_hat,"))
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    // predicted DiD bias for these params is -0.2
    assert!((beta - 0.8).abs() < 0.05, "beta_hat = {beta}");
}

#[test]
fn estimate_gaussian_data_exits_3() {
    let out = run(&[
        "simulate", "--n", "100000", "--seed", "4", "--family", "gaussian", "--alpha-z", "1",
        "--alpha-d", "1", "--beta", "1", "--gamma", "1", "--vars", "1,1,1,1",
    ]);
    assert!(out.status.success());
    let csv = stdout(&out);
    let est = run_with_stdin(
        &["estimate", "--method", "cross_moment", "--tol", "0.05", "--n-max", "4"],
        &csv,
    );
    assert_eq!(est.status.code(), Some(3), "{}", String::from_utf8_lossy(&est.stderr));
}

#[test]
fn estimate_missing_w_column_exits_2() {
    let csv = simulate_params_a("1000");
    let out = run_with_stdin(&["estimate", "--method", "two_proxy"], &csv);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bench_row_count() {
    let out = run(&[
        "bench", "--methods", "cross_moment,did,ols", "--sizes", "1000,10000", "--reps", "2",
        "--seed", "7",
    ]);
    assert!(out.status.success());
    let csv = stdout(&out);
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("method,x_axis,x_value,mean_err,std_err,failures,replications,seed")
    );
    // 3 methods x 2 sizes aggregated rows
    assert_eq!(lines.count(), 6);
}

#[test]
fn counterexample_report() {
    let out = run(&[
        "counterexample", "--alpha-z", "1", "--beta", "1", "--gamma", "1", "--vars", "1,1,1,1",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let equality_passes = text
        .lines()
        .filter(|l| l.ends_with(",PASS") && !l.starts_with("overall"))
        .count();
    assert_eq!(equality_passes, 6);
    assert!(text.contains("overall,PASS"));
    let beta2: f64 = text
        .lines()
        .find(|l| l.starts_with("beta_m2,"))
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!((beta2 - 1.2135).abs() < 1e-4);
}

#[test]
fn output_and_manifest_files() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("data.csv");
    let man_path = dir.path().join("runs.jsonl");
    let out = run(&[
        "simulate",
        "--n",
        "4",
        "--seed",
        "2",
        "--random-params",
        "--output",
        out_path.to_str().unwrap(),
        "--manifest",
        man_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let csv = std::fs::read_to_string(&out_path).unwrap();
    assert_eq!(csv.lines().count(), 5);
    // manifest file appends one JSON line per run
    let _ = run(&[
        "simulate", "--n", "4", "--seed", "2", "--random-params", "--output",
        out_path.to_str().unwrap(), "--manifest", man_path.to_str().unwrap(),
    ]);
    let manifest = std::fs::read_to_string(&man_path).unwrap();
    assert_eq!(manifest.lines().count(), 2);
    for line in manifest.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["subcommand"], "simulate");
    }
}

#[test]
fn table1_missing_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let mapping = dir.path().join("m.toml");
    std::fs::write(
        &mapping,
        "[roles]\nstate = \"STATE\"\npre_part_time = \"EMPPT\"\npre_full_time = \"EMPFT\"\npost_part_time = \"EMPPT2\"\npost_full_time = \"EMPFT2\"\n",
    )
    .unwrap();
    let out = run(&[
        "table1",
        "--data",
        dir.path().join("missing.dat").to_str().unwrap(),
        "--mapping",
        mapping.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn help_exits_0() {
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
}
