//! End-to-end runs of the `kcore` binary.

use std::process::{Command, Output};

fn kcore(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kcore"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn solve_and_threshold_print_csv() {
    let out = kcore(&["solve", "--k", "3", "--lambda", "4"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "k,lambda,beta,beta_plus,residual,converged"
    );
    let beta_plus: f64 = lines
        .next()
        .unwrap()
        .split(',')
        .nth(3)
        .unwrap()
        .parse()
        .unwrap();
    assert!((beta_plus - 0.6646706504).abs() < 1e-9);

    let out = kcore(&["threshold", "--k", "3"]);
    let lambda_c: f64 = stdout(&out)
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!((lambda_c - 3.3509188715).abs() < 1e-9);
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(kcore(&["bp", "--bogus"]).status.code(), Some(1));
    assert_eq!(kcore(&["solve", "--k", "3"]).status.code(), Some(1));
    assert_eq!(
        kcore(&["solve", "--k", "1", "--lambda", "2"]).status.code(),
        Some(1)
    );
}

#[test]
fn gen_then_core_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g.bin");
    let graph = graph.to_str().unwrap();
    let out = kcore(&[
        "gen", "--lambda", "4", "--n", "20000", "--seed", "3", "--out", graph,
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out = kcore(&["core", "--input", graph, "--k", "3"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let size: f64 = text
        .lines()
        .last()
        .unwrap()
        .split(',')
        .last()
        .unwrap()
        .parse()
        .unwrap();
    assert!((size / 20000.0 - 0.6647).abs() < 0.02, "{text}");
}

#[test]
fn experiment_exit_code_reflects_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.json");
    let write = |tolerance: f64| {
        std::fs::write(
            &config,
            format!(
                r#"{{"kind": "graph-vs-analytic", "model": {{"type": "erdos-renyi"}}, "k": 3,
                    "grid": [4.0], "n": [20000], "seeds": [1], "tolerance": {tolerance},
                    "output": "rows.csv"}}"#
            ),
        )
        .unwrap();
    };
    write(0.05);
    let out = kcore(&["experiment", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("rows.csv").exists());
    write(1e-9);
    let out = kcore(&["experiment", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn pooled_bp_runs_deep_trees() {
    let out = kcore(&[
        "bp",
        "--k",
        "3",
        "--lambda",
        "3",
        "--depth",
        "30",
        "--samples",
        "10000",
        "--pool-size",
        "20000",
        "--plus",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[2], "30");
    assert!(row[4].parse::<f64>().unwrap() < 0.01);
}
