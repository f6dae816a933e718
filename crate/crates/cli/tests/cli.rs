use elastodamp::semilinear::load_checkpoint;
use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};
use tempfile::TempDir;

fn elastodamp(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_elastodamp"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    std::fs::write(dir.join(name), body).unwrap();
    name.to_string()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

const SMALL_BOX: &str = r#"{
  "model": { "theta": 0.5 },
  "experiment": { "semilinear": { "n": 16, "length": 25.132741228718345, "t_final": 2.0, "dt": 0.05 } }
}"#;

#[test]
fn exponents_example_reports_case_two() {
    let tmp = TempDir::new().unwrap();
    let o = elastodamp(
        tmp.path(),
        &["exponents", "--p", "1.8", "3", "3", "--m", "1", "--theta", "0.5"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["case"], "ii");
    let g: Vec<f64> = serde_json::from_value(report["g"].clone()).unwrap();
    assert!((g[0] - 0.4).abs() < 1e-12 && g[1] == 0.0 && g[2] == 0.0);
    let csv = read(tmp.path(), "out/exponents.csv");
    assert!(csv.lines().nth(1) == Some("component,p,g"));
}

#[test]
fn symbol_check_passes_at_quarter() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "base.json", r#"{ "model": { "theta": 0.25 } }"#);
    let o = elastodamp(tmp.path(), &["symbol-check", "--config", &cfg, "--check"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(tmp.path(), "out/symbol-check.csv");
    let small: Vec<f64> = csv
        .lines()
        .filter(|l| l.starts_with("Int,"))
        .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
        .collect();
    assert_eq!(small.len(), 2);
    assert!(small.iter().all(|o| *o >= 4.0), "{small:?}");
}

#[test]
fn malformed_config_exits_two_with_field_message() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "bad.json",
        r#"{ "experiment": { "semilinear": { "dt": "fast" } } }"#,
    );
    let o = elastodamp(tmp.path(), &["simulate", "--config", &cfg]);
    assert_eq!(code(&o), 2);
    let log: Value = serde_json::from_str(&read(tmp.path(), "out/error.json")).unwrap();
    assert_eq!(log["kind"], "config");
    assert_eq!(log["exit_code"], 2);
    assert!(log["message"].as_str().unwrap().contains("invalid type"), "{log}");

    let cfg = write(tmp.path(), "typo.json", r#"{ "model": { "thetaa": 0.5 } }"#);
    let o = elastodamp(tmp.path(), &["simulate", "--config", &cfg]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("thetaa"));

    let cfg = write(tmp.path(), "order.json", r#"{ "model": { "a2": 4.0, "b2": 1.0 } }"#);
    let o = elastodamp(tmp.path(), &["gevrey", "--config", &cfg]);
    assert_eq!(code(&o), 2);
    let log: Value = serde_json::from_str(&read(tmp.path(), "out/error.json")).unwrap();
    assert_eq!(log["kind"], "validation");

    let o = elastodamp(tmp.path(), &["simulate", "--config", "missing.json"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn unknown_command_prints_usage() {
    let tmp = TempDir::new().unwrap();
    let o = elastodamp(tmp.path(), &["frobnicate"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert_eq!(code(&elastodamp(tmp.path(), &[])), 2);
}

#[test]
fn blow_up_exits_three() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "blow.json",
        r#"{ "model": { "theta": 0.5 },
             "experiment": { "semilinear": { "p": [3, 3, 3], "n": 16, "length": 6.283185307179586,
                                             "delta": 400, "t_final": 20, "dt": 0.01 } } }"#,
    );
    let o = elastodamp(tmp.path(), &["simulate", "--config", &cfg]);
    assert_eq!(code(&o), 3);
    let log: Value = serde_json::from_str(&read(tmp.path(), "out/error.json")).unwrap();
    assert_eq!(log["kind"], "non-finite");
}

#[test]
fn failed_check_exits_four_only_with_flag() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "tight.json",
        r#"{ "experiment": { "gevrey": { "tolerance": 0.0 } } }"#,
    );
    let o = elastodamp(tmp.path(), &["gevrey", "--config", &cfg]);
    assert_eq!(code(&o), 0);
    let o = elastodamp(tmp.path(), &["gevrey", "--config", &cfg, "--check"]);
    assert_eq!(code(&o), 4);
    let log: Value = serde_json::from_str(&read(tmp.path(), "out/error.json")).unwrap();
    assert_eq!(log["kind"], "check");
}

#[test]
fn identical_config_and_seed_give_identical_csv() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "box.json", SMALL_BOX);
    for out in ["a", "b"] {
        let o = elastodamp(
            tmp.path(),
            &["simulate", "--config", &cfg, "--out", out, "--threads", "2"],
        );
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = read(tmp.path(), "a/simulate.csv");
    assert_eq!(a, read(tmp.path(), "b/simulate.csv"));
    let stamp = a.lines().next().unwrap();
    assert!(stamp.starts_with(&format!("# elastodamp {} config-sha256 ", env!("CARGO_PKG_VERSION"))));
    assert_eq!(a.lines().nth(1).unwrap().split(',').count(), 13);

    for (out, seed) in [("s1", "1"), ("s1b", "1"), ("s2", "2")] {
        let o = elastodamp(tmp.path(), &["lyapunov", "--out", out, "--seed", seed]);
        assert_eq!(code(&o), 0);
    }
    let s1 = read(tmp.path(), "s1/lyapunov.csv");
    assert_eq!(s1, read(tmp.path(), "s1b/lyapunov.csv"));
    assert_ne!(s1, read(tmp.path(), "s2/lyapunov.csv"));
}

#[test]
fn printed_config_round_trips() {
    let tmp = TempDir::new().unwrap();
    let o = elastodamp(tmp.path(), &["--print-config"]);
    assert_eq!(code(&o), 0);
    let dumped = String::from_utf8(o.stdout).unwrap();
    let v: Value = serde_json::from_str(&dumped).unwrap();
    for section in ["model", "profile", "experiment"] {
        assert!(v.get(section).is_some());
    }
    let cfg = write(tmp.path(), "full.json", &dumped);
    let again = elastodamp(tmp.path(), &["--print-config", "--config", &cfg]);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), dumped);

    // Explicit defaults and an empty document hash the same.
    let empty = write(tmp.path(), "empty.json", "{}");
    elastodamp(tmp.path(), &["gevrey", "--config", &cfg, "--out", "full"]);
    elastodamp(tmp.path(), &["gevrey", "--config", &empty, "--out", "empty"]);
    assert_eq!(
        read(tmp.path(), "full/gevrey.csv"),
        read(tmp.path(), "empty/gevrey.csv")
    );
}

#[test]
fn picard_and_checkpoint_artifacts() {
    let tmp = TempDir::new().unwrap();
    let body = SMALL_BOX.replace(r#""dt": 0.05"#, r#""dt": 0.05, "checkpoint": true"#);
    let cfg = write(tmp.path(), "box.json", &body);
    let o = elastodamp(tmp.path(), &["picard", "--config", &cfg, "--check"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(tmp.path(), "out/picard.csv");
    assert_eq!(csv.lines().nth(1), Some("n,difference,ratio"));

    let o = elastodamp(tmp.path(), &["simulate", "--config", &cfg, "--check"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (state, header) = load_checkpoint::<f64>(&tmp.path().join("out/final.ckpt")).unwrap();
    assert_eq!(state.n, 16);
    assert!((header.t - 2.0).abs() < 1e-12);
    let report: Value = serde_json::from_str(&read(tmp.path(), "out/simulate.json")).unwrap();
    assert_eq!(report["checkpoint"], "final.ckpt");
}

#[test]
fn decay_and_diffusion_commands_write_series() {
    let tmp = TempDir::new().unwrap();
    let o = elastodamp(tmp.path(), &["decay-fit", "--check"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read(tmp.path(), "out/decay-fit.csv").lines().count(), 22);
    let o = elastodamp(tmp.path(), &["diffusion-gap", "--check"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        read(tmp.path(), "out/diffusion-gap.csv").lines().nth(1),
        Some("t,solution,reference,difference")
    );
}
