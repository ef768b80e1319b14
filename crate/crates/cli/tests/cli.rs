use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_adaptive-ensemble"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn synth(dir: &Path, horizon: usize, m: usize, seed: u64) -> std::path::PathBuf {
    let o = run(&[
        "synth",
        "--T",
        &horizon.to_string(),
        "--m",
        &m.to_string(),
        "--drift",
        "gaussian",
        "--seed",
        &seed.to_string(),
        "--out-dir",
        p(dir),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    dir.join("panel.csv")
}

#[test]
fn synth_writes_panel_and_is_reproducible() {
    let tmp = TempDir::new().unwrap();
    let a = synth(&tmp.path().join("a"), 300, 10, 7);
    let b = synth(&tmp.path().join("b"), 300, 10, 7);
    let text = fs::read_to_string(&a).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    assert_eq!(header.len(), 12);
    assert_eq!(header[0], "timestamp");
    assert_eq!(header[11], "target");
    assert_eq!(text.lines().count(), 301);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(fs::read(a.with_file_name("manifest.json")).unwrap(), fs::read(b.with_file_name("manifest.json")).unwrap());
}

#[test]
fn synth_without_seed_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let o = run(&["synth", "--T", "100", "--out-dir", p(tmp.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--seed"));
    assert!(!tmp.path().join("panel.csv").exists());
}

#[test]
fn manifest_lists_digested_outputs() {
    let tmp = TempDir::new().unwrap();
    synth(tmp.path(), 120, 3, 1);
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "synth");
    assert_eq!(m["seeds"], serde_json::json!([1]));
    assert_eq!(m["config"]["members"], 3);
    let out = &m["outputs"][0];
    assert_eq!(out["path"], "panel.csv");
    assert_eq!(out["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn backtest_mean_of_perfect_members_is_exact() {
    let tmp = TempDir::new().unwrap();
    let mut csv = String::from("timestamp,a,b,target\n");
    for t in 0..200 {
        let y = (t as f64 * 0.1).sin() + 2.0;
        csv.push_str(&format!("{t},{y},{y},{y}\n"));
    }
    let input = tmp.path().join("perfect.csv");
    fs::write(&input, csv).unwrap();
    let out = tmp.path().join("bt");
    let o = run(&["backtest", "--input", p(&input), "--methods", "mean,hindsight", "--out-dir", p(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = fs::read_to_string(out.join("report.csv")).unwrap();
    let rows: Vec<Vec<&str>> = report.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    for r in rows {
        for v in &r[1..6] {
            assert_eq!(v.parse::<f64>().unwrap(), 0.0, "{r:?}");
        }
    }
}

#[test]
fn backtest_reports_every_method_and_emits_weights() {
    let tmp = TempDir::new().unwrap();
    let input = synth(&tmp.path().join("s"), 400, 3, 2);
    let out = tmp.path().join("bt");
    let o = run(&[
        "backtest",
        "--input",
        p(&input),
        "--lambdas",
        "0.01,0.1",
        "--taus",
        "1,2",
        "--emit-weights",
        "--out-dir",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    for label in ["Best Model in Hindsight", "Ensemble Mean", "Exp3", "Passive-Aggressive", "Ridge", "Adaptive Ridge"] {
        assert!(text.contains(label), "missing {label}");
    }
    let report = fs::read_to_string(out.join("report.csv")).unwrap();
    assert_eq!(report.lines().count(), 7);
    let weights = fs::read_to_string(out.join("weights_adaptive_ridge.csv")).unwrap();
    assert_eq!(weights.lines().next().unwrap().split(',').count(), 4);
    assert_eq!(weights.lines().count(), 401);
    for name in ["report.json", "rule.json", "timing.csv", "manifest.json", "weights_ridge.csv"] {
        assert!(out.join(name).exists(), "missing {name}");
    }
    let r = run(&["report", "--dir", p(&out), "--svg", p(&tmp.path().join("w.svg"))]);
    assert!(r.status.success());
    assert!(fs::read_to_string(tmp.path().join("w.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn backtest_rejects_unknown_method() {
    let tmp = TempDir::new().unwrap();
    let input = synth(&tmp.path().join("s"), 100, 2, 2);
    let o = run(&["backtest", "--input", p(&input), "--methods", "lasso", "--out-dir", p(&tmp.path().join("bt"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn backtest_missing_input_is_a_data_error() {
    let tmp = TempDir::new().unwrap();
    let o = run(&["backtest", "--input", p(&tmp.path().join("nope.csv")), "--out-dir", p(&tmp.path().join("bt"))]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn campaign_requires_seeds() {
    let tmp = TempDir::new().unwrap();
    let o = run(&["campaign", "--vary", "drift", "--values", "0,0.5", "--out-dir", p(tmp.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--seeds"));
}

fn small_campaign(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "campaign",
        "--vary",
        "train_size",
        "--values",
        "30,150",
        "--seeds",
        "2",
        "--T",
        "400",
        "--m",
        "3",
        "--test-rows",
        "100",
        "--methods",
        "mean,adaptive_ridge",
        "--allow-overparameterized",
        "false",
        "--out-dir",
        p(out),
    ];
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn campaign_with_failed_cells_exits_4_unless_partial_allowed() {
    let tmp = TempDir::new().unwrap();
    let o = small_campaign(&tmp.path().join("a"), &[]);
    assert_eq!(o.status.code(), Some(4));
    let raw = fs::read_to_string(tmp.path().join("a/raw.csv")).unwrap();
    assert_eq!(raw.lines().filter(|l| l.contains(",failed,")).count(), 2);
    assert_eq!(raw.lines().count(), 9);

    let o = small_campaign(&tmp.path().join("b"), &["--allow-partial"]);
    assert!(o.status.success());
    assert_eq!(fs::read(tmp.path().join("a/results.csv")).unwrap(), fs::read(tmp.path().join("b/results.csv")).unwrap());
}

#[test]
fn campaign_outputs_and_report() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("c");
    let o = run(&[
        "campaign", "--vary", "drift", "--values", "0,0.5", "--seeds", "2", "--T", "500", "--m", "3", "--methods",
        "mean,ridge", "--out-dir", p(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let results = fs::read_to_string(out.join("results.csv")).unwrap();
    assert!(results.starts_with("method,drift,n_ok,n_failed,"));
    assert_eq!(results.lines().count(), 5);
    let chosen: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("chosen_params.json")).unwrap()).unwrap();
    assert_eq!(chosen["rows"].as_array().unwrap().len(), 8);
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let timing = m["outputs"].as_array().unwrap().iter().find(|f| f["path"] == "timing.csv").unwrap();
    assert!(timing["sha256"].is_null());

    let r = run(&["report", "--dir", p(&out), "--metric", "mae", "--svg", p(&tmp.path().join("c.svg"))]);
    assert!(r.status.success());
    let table = stdout(&r);
    assert!(table.contains("| method | drift=0 | drift=0.5 |"));
    assert!(table.contains("| ridge |"));
    assert!(tmp.path().join("c.svg").exists());
}

#[test]
fn verify_prints_a_pass_line_per_seed() {
    let tmp = TempDir::new().unwrap();
    let o = run(&["verify", "--samples", "200", "--out-dir", p(tmp.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS seed ")).count(), 20);
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("verify.json")).unwrap()).unwrap();
    assert_eq!(doc.as_array().unwrap().len(), 20);
}

#[test]
fn verify_other_sets() {
    for args in [["--norms", "l1,linf"], ["--norms", "linf,l1"], ["--frobenius", "2"]] {
        let o = run(&["verify", args[0], args[1], "--seeds", "3", "--samples", "200"]);
        assert!(o.status.success(), "{args:?}: {}", stdout(&o));
        assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("PASS")).count(), 3);
    }
    let o = run(&["verify", "--norms", "l2", "--seeds", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, "[synth]\nseed = 3\nmembers = 4\nhorizon = 150\n").unwrap();
    let a = tmp.path().join("a");
    let o = run(&["--config", p(&cfg), "synth", "--out-dir", p(&a)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(a.join("panel.csv")).unwrap();
    assert_eq!(text.lines().count(), 151);
    assert_eq!(text.lines().next().unwrap().split(',').count(), 6);

    let b = tmp.path().join("b");
    let o = run(&["--config", p(&cfg), "synth", "--m", "2", "--out-dir", p(&b)]);
    assert!(o.status.success());
    let text = fs::read_to_string(b.join("panel.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap().split(',').count(), 4);

    fs::write(&cfg, "[synth]\nseed = 3\nbogus = 1\n").unwrap();
    let o = run(&["--config", p(&cfg), "synth", "--out-dir", p(&tmp.path().join("c"))]);
    assert_eq!(o.status.code(), Some(2));
}
