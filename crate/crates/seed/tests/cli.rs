//! End-to-end tests of the installed binary: results on stdout, diagnostics
//! on stderr, exit 0 on success, 1 on user error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn testdata(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("testdata").join(rel)
}

fn seed(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seed")).args(args).output().expect("spawn binary")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is utf-8")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr is utf-8")
}

#[test]
fn parse_prints_canonical_functions() {
    let file = testdata("fixtures/sum_loop.ll");
    let out = seed(&["parse", file.to_str().unwrap(), "--strict"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    assert!(text.contains("define i32 @sum(i32 %n)"), "missing function header in: {text}");
    assert!(text.contains("phi"), "missing instruction in: {text}");
}

#[test]
fn parse_missing_file_is_a_user_error() {
    let out = seed(&["parse", "/nonexistent/nowhere.ll"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout_of(&out).is_empty(), "errors must not go to stdout");
    assert!(!stderr_of(&out).is_empty());
}

#[test]
fn unknown_flag_is_a_user_error() {
    let out = seed(&["parse", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn graph_exports_dot_and_json() {
    let file = testdata("fixtures/diamond.ll");
    let dot = seed(&["graph", file.to_str().unwrap(), "--format", "dot"]);
    assert_eq!(dot.status.code(), Some(0), "stderr: {}", stderr_of(&dot));
    assert!(stdout_of(&dot).starts_with("digraph"), "not dot: {}", stdout_of(&dot));

    let json = seed(&["graph", file.to_str().unwrap(), "--variant", "seed+type"]);
    assert_eq!(json.status.code(), Some(0), "stderr: {}", stderr_of(&json));
    let value: serde_json::Value = serde_json::from_str(&stdout_of(&json)).expect("json output");
    assert_eq!(value["variant"], "seed+type");
    assert!(value["nodes"].as_array().is_some_and(|n| !n.is_empty()));
    assert!(value["edges"].as_array().is_some_and(|e| !e.is_empty()));
}

#[test]
fn stats_covers_all_variants() {
    let corpus = testdata("corpus");
    let out = seed(&["stats", corpus.to_str().unwrap(), "--strict"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    for variant in ["seed", "seed+type", "seed+identifier"] {
        assert!(text.contains(variant), "missing {variant} row in: {text}");
    }
}

/// train -> eval -> detect against one short run; detect output must not
/// depend on argument order.
#[test]
fn train_eval_detect_roundtrip() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = dir.path().join("fast.conf");
    fs::write(
        &config,
        "train_problems = 1-4\nval_problems = 5-6\ntest_problems = 7-8\n\
         epochs = 3\npairs_train = 32\npairs_eval = 32\n",
    )
    .expect("write config");
    let corpus = testdata("corpus");
    let ckpt = dir.path().join("model.ckpt");

    let train = seed(&[
        "train",
        corpus.to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
        "--out",
        ckpt.to_str().unwrap(),
    ]);
    assert_eq!(train.status.code(), Some(0), "stderr: {}", stderr_of(&train));
    let summary: serde_json::Value =
        serde_json::from_str(&stdout_of(&train)).expect("train summary json");
    assert!(summary["best_val_f1"].is_f64() || summary["best_val_f1"].is_u64());
    assert!(ckpt.exists());
    assert!(dir.path().join("model.ckpt.vocab").exists());
    assert!(dir.path().join("model.ckpt.history.jsonl").exists());

    let eval = seed(&[
        "eval",
        corpus.to_str().unwrap(),
        ckpt.to_str().unwrap(),
        "val",
        "--config",
        config.to_str().unwrap(),
    ]);
    assert_eq!(eval.status.code(), Some(0), "stderr: {}", stderr_of(&eval));
    let report: serde_json::Value = serde_json::from_str(&stdout_of(&eval)).expect("eval json");
    assert!(report["f1"].is_number(), "missing f1 in: {report}");

    let a = corpus.join("1/v1.ll");
    let b = corpus.join("1/v2.ll");
    let forward = seed(&["detect", a.to_str().unwrap(), b.to_str().unwrap(), ckpt.to_str().unwrap()]);
    assert_eq!(forward.status.code(), Some(0), "stderr: {}", stderr_of(&forward));
    let verdict: serde_json::Value =
        serde_json::from_str(&stdout_of(&forward)).expect("detect json");
    assert!(verdict["similarity"].is_number());
    assert!(matches!(verdict["verdict"].as_str(), Some("clone" | "nonclone")));

    let reversed =
        seed(&["detect", b.to_str().unwrap(), a.to_str().unwrap(), ckpt.to_str().unwrap()]);
    assert_eq!(forward.stdout, reversed.stdout, "detect depends on argument order");
}

#[test]
fn invalid_config_value_is_a_user_error() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = dir.path().join("bad.conf");
    fs::write(&config, "epochs = -3\n").expect("write config");
    let out = seed(&[
        "train",
        testdata("corpus").to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().join("m.ckpt").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("epochs"), "stderr: {}", stderr_of(&out));
}

#[test]
fn overlapping_split_config_is_a_user_error() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = dir.path().join("overlap.conf");
    fs::write(&config, "train_problems = 1-4\nval_problems = 4-6\ntest_problems = 7-8\n")
        .expect("write config");
    let out = seed(&[
        "train",
        testdata("corpus").to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().join("m.ckpt").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("split"), "stderr: {}", stderr_of(&out));
}
