use estavg::config::{ExperimentConfig, Study};
use estavg::experiment::run_experiment;
use estavg::output::{format_sig6, summary_csv};
use estavg::presets;

fn cfg(json: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(json).unwrap()
}

#[test]
fn single_replicate_has_no_standard_error() {
    let out = run_experiment(&cfg(r#"{"study": "location", "reps": 1, "n": 30}"#)).unwrap();
    assert_eq!(out.records.len(), 1);
    let row = out.summary.row("mean").unwrap();
    let v = out.records[0].values[0].unwrap();
    assert_eq!(row.mse, Some(v * v));
    assert_eq!(row.mse_se, None);
    let csv = summary_csv(&out.summary);
    assert!(csv.lines().nth(1).unwrap().starts_with(&format!("mean,{},NA,NA,0", format_sig6(v * v))));
}

#[test]
fn accounting_covers_every_replicate() {
    let out = run_experiment(&presets::find("quantile-burr-n100").unwrap().scaled(0.004, 0.05)).unwrap();
    assert_eq!(out.records.len(), 40);
    for (j, row) in out.summary.rows.iter().enumerate() {
        let present = out.records.iter().filter(|r| r.values[j].is_some()).count();
        assert_eq!(present + row.dropped, 40, "{}", row.estimator);
    }
}

#[test]
fn rows_follow_bank_order() {
    let expect: [(&str, &[&str]); 4] = [
        ("location-cauchy-n30-avb", &["mean", "median", "avb"]),
        ("weibull-b1-n10", &["beta_ml", "beta_mm", "beta_ols", "eta_ml", "beta_av", "eta_av"]),
        ("quantile-gamma-n100", &["q_weibull", "q_gamma", "q_burr", "q_np", "q_av"]),
        ("synthetic-k4", &["t1", "t2", "t3", "t4", "av1", "av2", "oracle1", "oracle2"]),
    ];
    for (name, labels) in expect {
        let out = run_experiment(&presets::find(name).unwrap().scaled(0.001, 0.02)).unwrap();
        let got: Vec<&str> = out.summary.rows.iter().map(|r| r.estimator.as_str()).collect();
        assert_eq!(got, labels, "{name}");
    }
}

#[test]
fn seed_changes_results_and_reruns_repeat() {
    let base = cfg(r#"{"study": "weibull", "param1": 2, "param2": 10, "n": 20, "reps": 20, "b": 30}"#);
    let a = summary_csv(&run_experiment(&base).unwrap().summary);
    assert_eq!(a, summary_csv(&run_experiment(&base).unwrap().summary));
    let mut other = base.clone();
    other.seed += 1;
    assert_ne!(a, summary_csv(&run_experiment(&other).unwrap().summary));
}

#[test]
fn longer_runs_extend_shorter_ones() {
    let short = cfg(r#"{"study": "location", "family": "student", "nu": 4, "reps": 10, "n": 30}"#);
    let mut long = short.clone();
    long.reps = 25;
    let a = run_experiment(&short).unwrap();
    let b = run_experiment(&long).unwrap();
    assert_eq!(a.records[..], b.records[..10]);
}

#[test]
fn synthetic_study_respects_the_error_bound() {
    let out = run_experiment(&presets::find("synthetic-k4").unwrap().scaled(0.1, 1.0)).unwrap();
    let ratios = out.diagnostic("oracle_gap_ratio");
    assert_eq!(ratios.len(), 1000);
    assert!(ratios.iter().all(|&r| r <= 1.0 + 1e-9));
    // the oracle uses the true matrix, so it can only be better on average
    assert!(out.summary.mse("oracle1") <= out.summary.mse("av1") * 1.05);
}

#[test]
fn boolean_records_keep_measurements() {
    let mut c = presets::find("boolean-rho25").unwrap().scaled(0.0005, 0.1);
    c.resolution = 128;
    c.n_directions = 10;
    assert_eq!(c.study, Study::Boolean);
    let out = run_experiment(&c).unwrap();
    assert_eq!(out.diagnostic("a_obs").len(), 5);
    assert!(out.diagnostic("p_obs").iter().all(|&p| p > 0.0));
}
