use std::path::Path;
use std::process::{Command, Output};

fn jscds(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jscds")).args(args).output().unwrap()
}

fn gen(path: &Path, seed: &str) {
    let out = jscds(&[
        "gen", "--classes", "3", "--per-class", "40", "--dims", "5", "--noise", "0.1", "--seed", seed, "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn gen_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a.csv"), dir.path().join("b.csv"), dir.path().join("c.csv"));
    gen(&a, "3");
    gen(&b, "3");
    gen(&c, "4");
    let a = std::fs::read(a).unwrap();
    assert_eq!(a, std::fs::read(b).unwrap());
    assert_ne!(a, std::fs::read(c).unwrap());
    assert!(String::from_utf8(a).unwrap().starts_with("id,label,f0,f1,f2,f3,f4\n"));
}

#[test]
fn gen_reports_shape_and_flips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    let out = jscds(&[
        "--format", "json", "gen", "--classes", "4", "--per-class", "25", "--dims", "3", "--noise", "0.2", "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["samples"], 100);
    assert_eq!(v["dims"], 3);
    assert_eq!(v["classes"], 4);
    assert_eq!(v["flipped"], 20);
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(jscds(&["gen", "--noise", "1.5", "--out", "x.csv"]).status.code(), Some(1));
    assert_eq!(jscds(&["gen"]).status.code(), Some(1));
    assert_eq!(jscds(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(jscds(&["select", "d.csv", "--method", "jscds", "--fraction", "0", "--out", "s.json"]).status.code(), Some(1));
    assert_eq!(jscds(&["--help"]).status.code(), Some(0));
    assert_eq!(jscds(&["--version"]).status.code(), Some(0));
}

#[test]
fn forgetting_needs_a_trace() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    gen(&data, "0");
    let sel = dir.path().join("s.json");
    let out = jscds(&[
        "select", data.to_str().unwrap(), "--method", "forgetting", "--fraction", "0.5", "--out",
        sel.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--trace"));
}

#[test]
fn data_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "id,label,f0\n0,0,1.0\n1,1,oops\n").unwrap();
    let out = jscds(&[
        "select", bad.to_str().unwrap(), "--method", "random", "--fraction", "0.5", "--out",
        dir.path().join("s.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.csv:3:"));

    let missing = dir.path().join("missing.csv");
    let out = jscds(&[
        "select", missing.to_str().unwrap(), "--method", "random", "--fraction", "0.5", "--out",
        dir.path().join("s.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn select_writes_a_sized_selection() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    gen(&data, "1");
    let sel = dir.path().join("s.json");
    let out = jscds(&[
        "--format", "json", "select", data.to_str().unwrap(), "--method", "jscds", "--fraction", "0.3", "--out",
        sel.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["selected"], 36);
    assert!(summary["mi_min"].as_f64().unwrap() <= summary["mi_avg"].as_f64().unwrap());
    assert!(summary["mi_avg"].as_f64().unwrap() <= summary["mi_max"].as_f64().unwrap());
    let written: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(sel).unwrap()).unwrap();
    assert_eq!(written["method"], "jscds");
    assert_eq!(written["indices"].as_array().unwrap().len(), 36);
}

#[test]
fn train_then_eval_and_select_with_model_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    gen(&data, "2");
    let run = dir.path().join("run");
    let out = jscds(&[
        "train", data.to_str().unwrap(), "--method", "jscds", "--fraction", "0.5", "--epochs", "4",
        "--reselect-every", "2", "--seed", "5", "--out", run.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for file in ["report.json", "timing.json", "model.json", "trace.csv"] {
        assert!(run.join(file).exists(), "{file} missing");
    }
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(run.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["losses"].as_array().unwrap().len(), 4);
    assert_eq!(report["reselection_epochs"], serde_json::json!([0, 2]));

    let metrics = dir.path().join("metrics.json");
    let out = jscds(&[
        "eval", data.to_str().unwrap(), "--model", run.join("model.json").to_str().unwrap(), "--out",
        metrics.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(metrics.exists());

    let out = jscds(&[
        "select", data.to_str().unwrap(), "--method", "kcenter", "--fraction", "0.2", "--model",
        run.join("model.json").to_str().unwrap(), "--out", dir.path().join("k.json").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    // The trace covers only the training split, so it cannot drive a selection over the whole file.
    let out = jscds(&[
        "select", data.to_str().unwrap(), "--method", "forgetting", "--fraction", "0.2", "--trace",
        run.join("trace.csv").to_str().unwrap(), "--out", dir.path().join("f.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn benchmark_writes_report_and_series() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    gen(&data, "3");
    let bench = dir.path().join("bench");
    let out = jscds(&[
        "benchmark", data.to_str().unwrap(), "--methods", "random,jscds", "--fractions", "0.5", "--seeds", "0,1",
        "--epochs", "3", "--reselect-every", "3", "--out", bench.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for file in ["report.json", "timing.json", "series_acc.csv", "series_f1.csv"] {
        assert!(bench.join(file).exists(), "{file} missing");
    }
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("jscds") && stdout.contains("random"));
}
