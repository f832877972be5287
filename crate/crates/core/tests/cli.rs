use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_splinecolloc")).args(args).env("SPLINECOLLOC_THREADS", "1").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn osc_demo_reports_error() {
    let o = bin(&["osc-demo", "--problem", "a3", "--n", "3", "--r", "3"]);
    assert!(o.status.success());
    let csv = stdout(&o);
    assert!(csv.starts_with("x,u_hat,u_exact\n"));
    assert_eq!(csv.lines().count(), 202);
    assert!(stderr(&o).contains("max error"));

    let o = bin(&["osc-demo", "--problem", "poly-exact", "--r", "4"]);
    let err: f64 = stderr(&o).lines().last().unwrap().rsplit(' ').next().unwrap().parse().unwrap();
    assert!(err <= 1e-12);
}

#[test]
fn usage_errors_are_one_line() {
    for args in [&["osc-demo", "--r", "1"][..], &["compare", "--problem", "nope"], &["frobnicate"], &["train", "--dataset", "missing/dataset.json"]] {
        let o = bin(args);
        assert!(!o.status.success(), "{args:?}");
        assert_eq!(stderr(&o).trim_end().lines().count(), 1, "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn compare_tables() {
    let o = bin(&["compare", "--problem", "1d-nonlinear", "--n", "6"]);
    assert!(o.status.success());
    let csv = stdout(&o);
    assert_eq!(csv.lines().count(), 1 + 5);
    let o = bin(&["compare", "--all"]);
    assert_eq!(stdout(&o).lines().count(), 1 + 4 * 5);
}

#[test]
fn bench_abd_csv() {
    let o = bin(&["bench-abd", "--sizes", "64,128"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 3);
    assert!(stderr(&o).contains("fitted exponent"));
}

#[test]
fn gen_data_then_train_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("heat");
    let o = bin(&["gen-data", "--dataset", "heat", "--out", data.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest = data.join("dataset.json");
    let mut checkpoints = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let o = bin(&["train", "--dataset", manifest.to_str().unwrap(), "--variant", "e2e", "--epochs", "2", "--seed", "5", "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
        let summary: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
        assert_eq!(summary["variant"], "e2e");
        let metrics = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
        assert_eq!(metrics.lines().next(), Some("epoch,L,L_s,L_i"));
        assert_eq!(metrics.lines().count(), 3);
        checkpoints.push(std::fs::read(out.join("checkpoint.json")).unwrap());
    }
    assert_eq!(checkpoints[0], checkpoints[1]);
}
