use critline::experiments::{run_experiment, validate, ExperimentConfig, EXPERIMENTS};
use critline::LabError;
use serde_json::{json, Value};

fn config(tag: &str, params: Value, seed: Option<u64>) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(tag);
    if let Value::Object(m) = params {
        c.params = m.into_iter().collect();
    }
    c.seed = seed;
    c
}

/// Small instances of every experiment; each must run and pass its hard checks.
fn small(tag: &str) -> ExperimentConfig {
    match tag {
        "grid" => config(tag, json!({"log_t": 1e5, "cutoff": 3}), None),
        "sieve" => config(tag, json!({"limit": 50_000}), None),
        "partial-sums" => config(tag, json!({"t_values": [0.0, 2.0], "majorant_log_x": 4.0}), None),
        "levelset" => config(tag, json!({"log_t": 10.0, "n_samples": 2000}), Some(1)),
        "moments" => config(tag, json!({"log_t": 10.0, "n_samples": 5000, "level_step": 0.05}), Some(1)),
        "surrogate-clt" => config(tag, json!({"log_t_ell": 5.0, "trials": 20_000, "ks_threshold": 0.05}), Some(1)),
        "moment-bounds" => config(tag, json!({"trials": 5000}), Some(1)),
        "mgf" => config(tag, json!({"log_t_values": [1000.0], "table_limit": 100_000}), None),
        "indicator" => config(tag, json!({"delta": 3, "x_range": 30, "n_grid": 2000}), None),
        "barriers" => config(tag, json!({"trials": 2000, "profile_trials": 2000}), Some(1)),
        "two-point" => config(tag, json!({"trials": 2000, "t_ell_values": [10000.0]}), Some(1)),
        "short-max" => config(tag, json!({"log_t": 8.0, "centers": 4, "gamma_exp": 0.5}), Some(1)),
        _ => unreachable!(),
    }
}

#[test]
fn every_experiment_runs_small() {
    for tag in EXPERIMENTS {
        let r = run_experiment(&small(tag)).unwrap_or_else(|e| panic!("{tag}: {e}"));
        let failed: Vec<_> = r.provenance.iter().filter(|c| c.pass == Some(false)).collect();
        assert!(r.passed, "{tag}: {failed:?}");
        assert!(!r.provenance.is_empty(), "{tag}");
        assert!(r.finished >= r.started);
    }
}

#[test]
fn stochastic_experiments_need_a_seed() {
    for tag in ["levelset", "barriers", "two-point", "short-max"] {
        let mut c = small(tag);
        c.seed = None;
        assert!(matches!(validate(&c), Err(LabError::Schema(_))), "{tag}");
    }
}

#[test]
fn indicator_delta_options_are_exclusive() {
    let both = config("indicator", json!({"delta": 3, "scan_max_delta": 4, "x_range": 30}), None);
    assert!(validate(&both).is_err());
    let neither = config("indicator", json!({}), None);
    assert!(validate(&neither).is_err());
}

#[test]
fn indicator_scan_finds_a_delta() {
    let r = run_experiment(&config("indicator", json!({"scan_max_delta": 4, "x_range": 30, "n_grid": 2000}), None))
        .unwrap();
    assert_eq!(r.results["found"], true);
    assert!(r.results["scan"]["smallest"].as_f64().unwrap() >= 3.0);
}

#[test]
fn defaults_are_echoed() {
    let r = run_experiment(&config("grid", json!({"log_t": 1e4}), None)).unwrap();
    assert_eq!(r.config.params["cutoff"], json!(2.0));
    assert_eq!(r.config.params["gamma"], json!(0.04));
}

#[test]
fn oversized_tables_are_refused() {
    let c = config("surrogate-clt", json!({"log_t_ell": 21.9}), Some(1));
    // e^{21.9} is within the cap, so it validates; the run itself would be
    // huge, so only check validation here.
    assert!(validate(&c).is_ok());
    let c = config("surrogate-clt", json!({"log_t_ell": 23.0}), Some(1));
    assert!(validate(&c).is_err());
}
