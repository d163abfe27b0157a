//! End-to-end runs of the command-line binary.

use std::path::Path;
use std::process::{Command, Output};

const FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/wdbc.data");

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_histoensemble"))
        .args(args)
        .env_remove("SOURCE_DATE_EPOCH")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn reproduce_writes_reports_and_bundle() {
    let out = tempfile::tempdir().unwrap();
    let o = run(&["reproduce", "--input", FIXTURE, "--seed", "3", "--out", path(out.path()), "--emit-rules"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("Overall Error Rate"));
    assert!(stdout.contains("[ Mode:"));
    for f in [
        "bundle.json",
        "rules.txt",
        "comparison.txt",
        "confusion_cart.csv",
        "confusion_logistic.csv",
        "confusion_ensemble.csv",
        "rates_ensemble.csv",
        "predictions_ensemble.csv",
        "eda/stats.csv",
        "eda/correlation.csv",
        "cluster/purity.csv",
    ] {
        assert!(out.path().join(f).is_file(), "missing {f}");
    }
    let preds = std::fs::read_to_string(out.path().join("predictions_ensemble.csv")).unwrap();
    assert!(preds.starts_with("id,actual,predicted,confidence,winning_member\n"));
    assert_eq!(preds.lines().count(), 1 + 121);
}

#[test]
fn train_then_evaluate_matches_reproduce() {
    let dir = tempfile::tempdir().unwrap();
    let (train, eval, full) = (dir.path().join("t"), dir.path().join("e"), dir.path().join("r"));
    assert_eq!(code(&run(&["train", "--input", FIXTURE, "--seed", "5", "--out", path(&train)])), 0);
    let bundle = train.join("bundle.json");
    let o = run(&["evaluate", "--input", FIXTURE, "--bundle", path(&bundle), "--out", path(&eval)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(code(&run(&["reproduce", "--input", FIXTURE, "--seed", "5", "--out", path(&full)])), 0);
    for f in ["confusion_cart.csv", "confusion_logistic.csv", "confusion_ensemble.csv"] {
        assert_eq!(std::fs::read(eval.join(f)).unwrap(), std::fs::read(full.join(f)).unwrap(), "{f}");
    }
    assert_eq!(std::fs::read(&bundle).unwrap(), std::fs::read(full.join("bundle.json")).unwrap());
}

#[test]
fn evaluate_single_model_and_predict() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["train", "--input", FIXTURE, "--out", path(dir.path())])), 0);
    let bundle = dir.path().join("bundle.json");
    let eval = dir.path().join("eval");
    let o = run(&["evaluate", "--input", FIXTURE, "--bundle", path(&bundle), "--model", "cart", "--out", path(&eval)]);
    assert_eq!(code(&o), 0);
    assert!(eval.join("confusion_cart.csv").is_file());
    assert!(!eval.join("confusion_logistic.csv").exists());

    let pred = dir.path().join("pred");
    let o = run(&["predict", "--input", FIXTURE, "--bundle", path(&bundle), "--out", path(&pred)]);
    assert_eq!(code(&o), 0);
    let csv = std::fs::read_to_string(pred.join("predictions.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 569);
}

#[test]
fn batch_reproduce_writes_summary_in_seed_order() {
    let out = tempfile::tempdir().unwrap();
    let o = run(&["reproduce", "--input", FIXTURE, "--seeds", "2..4", "--out", path(out.path())]);
    assert_eq!(code(&o), 0);
    let summary = std::fs::read_to_string(out.path().join("summary.csv")).unwrap();
    let seeds: Vec<&str> = summary.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(seeds, ["2", "3", "4"]);
    assert!(out.path().join("seed_3/bundle.json").is_file());
}

#[test]
fn eda_preprocess_and_cluster_commands() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["eda", "--input", FIXTURE, "--out", path(dir.path())])), 0);
    assert!(dir.path().join("histograms/radius.csv").is_file());
    assert_eq!(code(&run(&["preprocess", "--input", FIXTURE, "--out", path(dir.path())])), 0);
    let train = std::fs::read_to_string(dir.path().join("train.csv")).unwrap();
    assert_eq!(train.lines().count(), 1 + 448);
    assert!(!train.lines().next().unwrap().contains("perimeter"));
    assert_eq!(code(&run(&["cluster", "--input", FIXTURE, "--out", path(dir.path())])), 0);
    assert!(dir.path().join("centroids.csv").is_file());
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(code(&run(&[])), 1);
    assert_eq!(code(&run(&["reproduce", "--input", FIXTURE, "--seed", "x"])), 1);
    assert_eq!(code(&run(&["reproduce", "--input", FIXTURE, "--seeds", "5..2"])), 1);
    let out = tempfile::tempdir().unwrap();
    let o = run(&["reproduce", "--input", FIXTURE, "--pivot", "bogus", "--out", path(out.path())]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("correlation"));
    let o = run(&["reproduce", "--input", FIXTURE, "--train-count", "569", "--out", path(out.path())]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("split stage"));
}

#[test]
fn data_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.data");
    assert_eq!(code(&run(&["eda", "--input", path(&missing), "--out", path(dir.path())])), 2);

    let bad = dir.path().join("bad.data");
    std::fs::write(&bad, "1,M,1,2\n").unwrap();
    let o = run(&["eda", "--input", path(&bad), "--out", path(dir.path())]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("record 1"));

    let truncated = dir.path().join("bundle.json");
    std::fs::write(&truncated, "{\"format_version\": 1, \"schema\": [").unwrap();
    let o = run(&["predict", "--input", FIXTURE, "--bundle", path(&truncated), "--out", path(dir.path())]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));
}

#[test]
fn numerical_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let lines: String = (0..12).map(|i| format!("{i},B,{}\n", vec!["1.0"; 30].join(","))).collect();
    let flat = dir.path().join("flat.data");
    std::fs::write(&flat, lines).unwrap();
    let o = run(&["eda", "--input", path(&flat), "--out", path(dir.path())]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}
