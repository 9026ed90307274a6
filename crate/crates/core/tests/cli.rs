use std::fs;
use std::path::Path;
use std::process::Command;

use graphmetric::experiment::{regenerate_from_sidecar, Report};

const BIN: &str = env!("CARGO_BIN_EXE_graphmetric");

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path
}

fn moons_config(n: usize, k: usize, lr: f64, init: &str) -> String {
    format!(
        r#"{{
  "dataset": {{ "two_moons": {{ "n": {n}, "noise_sd": 0.1, "nuisance_dims": 2, "nuisance_sd": 1.0 }} }},
  "split": {{ "labeled_per_class": 4, "val_fraction": 0.5 }},
  "graph": {{ "k": {k}, "sigma": "median_heuristic" }},
  "propagation": {{ "alpha": 0.9, "steps": 10 }},
  "train": {{ "epochs": 5, "lr": {lr}, "model": {{ "kind": "Linear", "d_prime": 4, "init": {init} }} }},
  "seeds": [3, 1, 2]
}}"#
    )
}

fn run(args: &[&str]) -> std::process::Output {
    Command::new(BIN).args(args).output().unwrap()
}

#[test]
fn generate_writes_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &moons_config(40, 3, 0.1, r#""identity_pad""#));
    let out = dir.path().join("gen");
    let o = run(&["generate", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seeds", "5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("dataset_seed5.csv")).unwrap();
    assert_eq!(csv.lines().count(), 41);
    assert!(csv.starts_with("f0,f1,f2,f3,label\n"));

    let side: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("dataset_seed5.json")).unwrap()).unwrap();
    assert_eq!(side["seed"], 5);

    let again = regenerate_from_sidecar(out.join("dataset_seed5.json")).unwrap();
    assert_eq!(graphmetric::data::to_csv_string(&again), csv);
}

#[test]
fn baseline_rejects_k_too_large() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &moons_config(20, 20, 0.1, r#""identity_pad""#));
    let o = run(&["baseline", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("k must satisfy"), "{err}");
}

#[test]
fn malformed_config_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"dataset": {}, "bogus": 1}"#);
    let o = run(&["train", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn frozen_training_matches_baseline_and_report_is_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &moons_config(60, 5, 0.0, r#""identity_pad""#));
    let out = dir.path().join("train");
    let o = run(&["train", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = Report::from_json(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report.rows.iter().map(|r| r.seed).collect::<Vec<_>>(), vec![1, 2, 3]);
    for row in &report.rows {
        assert_eq!(row.learned_accuracy, Some(row.baseline_accuracy));
        assert_eq!(row.epochs_run, Some(5));
        assert!(out.join(format!("model_seed{}.json", row.seed)).exists());
        let hist = fs::read_to_string(out.join(format!("history_seed{}.jsonl", row.seed))).unwrap();
        assert_eq!(hist.lines().count(), 5);
    }
    let recomputed = graphmetric::experiment::Aggregate::from_rows(&report.rows);
    assert_eq!(recomputed, report.aggregate);
    assert_eq!(report.aggregate.improvement_median, Some(0.0));
}

#[test]
fn gradcheck_passes_on_the_shipped_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/gradcheck_small.json");
    let o = run(&["gradcheck", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("PASS") && !text.contains("FAIL"));
    for h in ["1e-4", "1e-5", "1e-6"] {
        assert!(text.contains(&format!("h = {h}")), "{text}");
    }
    assert!(dir.path().join("gradcheck.json").exists());
}
