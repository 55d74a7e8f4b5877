//! End-to-end checks of the `maccoop` binary: argument handling, report
//! shape, exit codes, and determinism across worker counts.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

use maccoop::code::pair_index;
use maccoop::files::{load_code, save_channel, save_code};
use maccoop::{CooperationCode, DiscreteMac, LinkCapacities};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_maccoop"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn parse_stdout(output: &Output) -> Value {
    serde_json::from_slice(&output.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&output.stdout))
    })
}

fn run_json(args: &[&str]) -> Value {
    let output = run(args);
    assert!(
        output.status.success(),
        "command {:?} failed: {}",
        args,
        String::from_utf8_lossy(&output.stderr)
    );
    parse_stdout(&output)
}

/// Deterministic pair channel: `a x a` inputs, output `(x1, x2)`.
fn pair_mac(a: usize) -> DiscreteMac {
    let labels = |k: usize| (0..k).map(|i| i.to_string()).collect::<Vec<_>>();
    let mut p = vec![vec![vec![0.0; a * a]; a]; a];
    for (i, rows) in p.iter_mut().enumerate() {
        for (j, row) in rows.iter_mut().enumerate() {
            row[i * a + j] = 1.0;
        }
    }
    DiscreteMac::new(labels(a), labels(a), labels(a * a), p).unwrap()
}

/// Zero-error identity code on `pair_mac(a)` with one channel use.
fn identity_code(a: usize) -> CooperationCode {
    CooperationCode::without_conferencing(
        1,
        [a, a],
        [a, a],
        a * a,
        [(0..a).collect(), (0..a).collect()],
        (0..a * a).map(|y| pair_index(y / a, y % a, a)).collect(),
        LinkCapacities::zero(),
    )
    .unwrap()
}

/// Zero-error code on `pair_mac(4)` with two uses and 16 messages per user.
fn wide_clean_code() -> CooperationCode {
    let decode = |yflat: usize| {
        let (y1, y2) = (yflat / 16, yflat % 16);
        let m1 = (y1 / 4) * 4 + (y2 / 4);
        let m2 = (y1 % 4) * 4 + (y2 % 4);
        pair_index(m1, m2, 16)
    };
    CooperationCode::without_conferencing(
        2,
        [16, 16],
        [4, 4],
        16,
        [(0..16).collect(), (0..16).collect()],
        (0..256).map(decode).collect(),
        LinkCapacities::zero(),
    )
    .unwrap()
}

fn write_fixtures(dir: &Path, a: usize, code: &CooperationCode) -> (PathBuf, PathBuf) {
    let channel = dir.join("channel.json");
    let code_path = dir.join("code.json");
    save_channel(&channel, &pair_mac(a)).unwrap();
    save_code(&code_path, code).unwrap();
    (channel, code_path)
}

#[test]
fn dueck_reports_the_closed_form_gap() {
    let report = run_json(&["capacity", "dueck", "--alphas", "0.5"]);
    let row = &report["result"]["rows"][0];
    assert!((row["gap"].as_f64().unwrap() - 1.0 / 9.0).abs() < 1e-9);
    assert_eq!(report["command"], "capacity dueck");
    assert_eq!(report["tool"], "maccoop");
    assert_eq!(report["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn zero_error_codes_evaluate_to_zero() {
    let dir = tempfile::tempdir().unwrap();
    let (channel, code) = write_fixtures(dir.path(), 2, &identity_code(2));
    let report = run_json(&[
        "code",
        "eval",
        "--channel",
        channel.to_str().unwrap(),
        "--code",
        code.to_str().unwrap(),
        "--r1",
        "0.5",
        "--r2",
        "0.5",
    ]);
    let result = &report["result"];
    assert_eq!(result["avg"].as_f64().unwrap(), 0.0);
    assert_eq!(result["max"].as_f64().unwrap(), 0.0);
    assert_eq!(result["blockwise"]["value"].as_f64().unwrap(), 0.0);
    assert_eq!(report["seed"], 0);
}

#[test]
fn sparse_matrix_search_verifies_and_reports_the_bound() {
    let dir = tempfile::tempdir().unwrap();
    let matrix = dir.path().join("matrix.txt");
    std::fs::write(&matrix, "1000\n0000\n0000\n0000\n").unwrap();
    let report =
        run_json(&["perm", "search", "--matrix", matrix.to_str().unwrap(), "--k", "2"]);
    let result = &report["result"];
    assert_eq!(result["status"], "found");
    assert_eq!(result["verified"], true);
    // Existence bound for m = n = 4, one nonzero, k = 2: e^4 / 64.
    let expected = (4.0f64).exp() / 64.0;
    assert!((result["existence_bound"].as_f64().unwrap() - expected).abs() < 1e-9);
}

#[test]
fn dense_matrix_search_is_certified_impossible() {
    let dir = tempfile::tempdir().unwrap();
    let matrix = dir.path().join("ones.txt");
    std::fs::write(&matrix, "1111\n1111\n1111\n1111\n").unwrap();
    let output =
        run(&["perm", "search", "--matrix", matrix.to_str().unwrap(), "--k", "2"]);
    assert_eq!(output.status.code(), Some(2));
    let report = parse_stdout(&output);
    assert_eq!(report["result"]["status"], "nonexistent");
    assert_eq!(report["result"]["exhaustive"], true);
}

#[test]
fn thm1_transform_writes_a_loadable_guaranteed_code() {
    let dir = tempfile::tempdir().unwrap();
    let (channel, code) = write_fixtures(dir.path(), 4, &wide_clean_code());
    let out = dir.path().join("out.json");
    let report = run_json(&[
        "transform",
        "thm1",
        "--channel",
        channel.to_str().unwrap(),
        "--code",
        code.to_str().unwrap(),
        "--r1",
        "0.5",
        "--r2",
        "0.5",
        "--delta",
        "0.2",
        "--out",
        out.to_str().unwrap(),
    ]);
    let inner = &report["result"]["report"];
    assert_eq!(inner["guarantee_met"], true);
    assert_eq!(inner["blockwise_after"].as_f64().unwrap(), 0.0);
    let transformed = load_code(&out).unwrap();
    assert!(transformed.m()[0] >= 1 && transformed.m()[0] <= 16);
}

#[test]
fn usage_errors_take_the_reserved_exit_code() {
    let output = run(&["capacity", "dueck", "--bogus"]);
    assert_eq!(output.status.code(), Some(64));
    let output = run(&["no-such-command"]);
    assert_eq!(output.status.code(), Some(64));
}

#[test]
fn validation_errors_still_emit_a_report() {
    let output = run(&[
        "code",
        "eval",
        "--channel",
        "/nonexistent/channel.json",
        "--code",
        "/nonexistent/code.json",
        "--r1",
        "0.5",
        "--r2",
        "0.5",
    ]);
    assert_eq!(output.status.code(), Some(1));
    let report = parse_stdout(&output);
    assert!(report["result"]["error"].as_str().unwrap().contains("channel"));
}

#[test]
fn reports_do_not_depend_on_the_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let matrix = dir.path().join("matrix.txt");
    std::fs::write(&matrix, "10010110\n01101001\n10010110\n01101001\n10010110\n01101001\n10010110\n01101001\n").unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        for _ in 0..2 {
            let output = bin()
                .args(["perm", "search", "--matrix", matrix.to_str().unwrap(), "--k", "2", "--seed", "7"])
                .env("MACCOOP_THREADS", threads)
                .output()
                .expect("binary runs");
            outputs.push(output.stdout);
        }
    }
    for other in &outputs[1..] {
        assert_eq!(&outputs[0], other);
    }
}
