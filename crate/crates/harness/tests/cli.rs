use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use estavg::config::ExperimentConfig;
use estavg::output::SUMMARY_HEADER;

fn estavg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_estavg")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("cfg.json");
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn run_writes_summary_and_echo() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"study": "location", "family": "logistic", "n": 40, "reps": 50}"#);
    let out = dir.path().join("out");
    let o = estavg(&["run", "--config", &cfg, "--seed", "9", "--out", out.to_str().unwrap(), "--records"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines[0], SUMMARY_HEADER);
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("mean,") && lines[3].starts_with("av,"));
    assert_eq!(String::from_utf8(o.stdout).unwrap(), summary);

    let echo = ExperimentConfig::load(&out.join("config.json")).unwrap();
    assert_eq!(echo.seed, 9);
    assert_eq!(echo.reps, 50);
    let records = fs::read_to_string(out.join("records.csv")).unwrap();
    assert_eq!(records.lines().count(), 51);
    assert!(records.starts_with("index,status,mean,median,av,av_hit,av_risk"));
}

#[test]
fn echoed_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let o = estavg(&[
        "run",
        "--preset",
        "weibull-b2-n20",
        "--reps",
        "20",
        "--scale-b",
        "0.05",
        "--out",
        a.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let b = dir.path().join("b");
    let echo = a.join("config.json");
    let o = estavg(&["run", "--config", echo.to_str().unwrap(), "--out", b.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(fs::read(a.join("summary.csv")).unwrap(), fs::read(b.join("summary.csv")).unwrap());
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let bad = write_config(dir.path(), r#"{"study": "boolean", "sigma_method": "plugin"}"#);
    assert_eq!(estavg(&["run", "--config", &bad, "--out", out.to_str().unwrap()]).status.code(), Some(2));
    let missing = dir.path().join("nope.json");
    assert_eq!(estavg(&["run", "--config", missing.to_str().unwrap()]).status.code(), Some(2));
    let zero = write_config(dir.path(), r#"{"study": "location"}"#);
    assert_eq!(estavg(&["run", "--config", &zero, "--reps", "0"]).status.code(), Some(2));
    assert_eq!(estavg(&["run", "--preset", "no-such-preset"]).status.code(), Some(2));
}

#[test]
fn excess_failures_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    // almost every realization is empty, so the area-based estimators are undefined
    let cfg = write_config(dir.path(), r#"{"study": "boolean", "rho": 0.01, "reps": 10, "b": 4, "resolution": 64}"#);
    let out = dir.path().join("out");
    let o = estavg(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(!out.join("summary.csv").exists());
}

#[test]
fn disc_export_writes_xyr_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"study": "boolean", "rho": 25, "reps": 2, "b": 4, "resolution": 128, "n_directions": 5}"#,
    );
    let out = dir.path().join("out");
    let o = estavg(&["run", "--config", &cfg, "--out", out.to_str().unwrap(), "--export-discs", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for i in 0..2 {
        let text = fs::read_to_string(out.join("discs").join(format!("rep{i:05}.txt"))).unwrap();
        assert!(text.lines().count() > 0);
        for line in text.lines() {
            let v: Vec<f64> = line.split_whitespace().map(|t| t.parse().unwrap()).collect();
            assert_eq!(v.len(), 3);
            assert!(v[2] > 0.0 && v[2] <= 0.1);
        }
    }
}

#[test]
fn presets_list_and_show() {
    let o = estavg(&["presets", "list"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for name in ["location-gauss-n100-av", "weibull-b3-n50", "boolean-rho150", "quantile-lognormal-n1000"] {
        assert!(text.contains(name), "{name}");
    }
    let o = estavg(&["presets", "show", "quantile-burr-n100"]);
    assert!(o.status.success());
    let cfg = ExperimentConfig::from_json(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!((cfg.n, cfg.p), (100, 0.99));
}

#[test]
fn verify_passes() {
    let o = estavg(&["verify"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 6);
}
