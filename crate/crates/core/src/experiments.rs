//! Experiment configurations, their schemas and dispatch to the library.
//!
//! Every experiment declares its parameters (type, default, range). A
//! configuration is checked against that schema in full before anything
//! runs, and every violation is reported at once.

use std::collections::BTreeMap;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::barrier::increments::IncrementGrid;
use crate::barrier::profiles::{
    covariance_difference, default_u_values, one_point_profile, two_point_profile, OnePointConfig, TwoPointConfig,
};
use crate::barrier::torus::torus_expectation;
use crate::barrier::{audit_model_batch, primed_implication_condition, TrajectoryModel};
use crate::dirichlet::{
    partial_sum, solve_lambda0, DirichletCoeffs, DirichletPolySpec, MajorantParams, SoundMajorant,
    PARTIAL_SUM_LAMBDA,
};
use crate::error::{invalid, LabError, Result};
use crate::grid::{barrier_bounds, build_grid, key_condition_exponent, truncation_index, CheckpointGrid, GridParams};
use crate::indicator::{
    build_indicator_poly, eval_enclosure, smallest_valid_delta, validate_sandwich,
};
use crate::models::{
    analytic_second_order, bessel_identity_gap, coeff_covariance, exact_moments, ks_statistic_normal, mean_and_se,
    mgf_bound_check, moment_bound_check, prime_components, sqrt_bound_constant, variance_and_se, IncrementSpec,
    ModelKind, ModelSampler,
};
use crate::numeric::gaussian_tail_quadrature;
use crate::primes::{mertens_log_sum, sieve_primes, weighted_prime_sum, PrimeSumForm, PrimeTable};
use crate::report::{Check, ConfigEcho, ExperimentReport};
use crate::rng::StreamFactory;
use crate::zeta::{level_set_from_samples, moment_via_levelsets_from, sample_log_abs, short_interval_max};

/// Stable tags naming the identity or bound each check exercises.
pub mod targets {
    pub const CHECKPOINTS: &str = "checkpoint_scales";
    pub const BARRIERS: &str = "barrier_levels";
    pub const TRUNCATION: &str = "truncation_length";
    pub const KEY_CONDITION: &str = "key_condition";
    pub const PRIME_SUPPORT: &str = "prime_support";
    pub const VARIANCE: &str = "variance";
    pub const COVARIANCE: &str = "covariance";
    pub const MERTENS: &str = "mertens";
    pub const PARTIAL_SUMS: &str = "partial_sums";
    pub const LAMBDA0: &str = "sound_lambda0";
    pub const MAJORANT: &str = "sound_bound";
    pub const LEVEL_SET: &str = "level_set_measure";
    pub const IBP: &str = "moment_ibp";
    pub const SELBERG: &str = "selberg_clt";
    pub const MEAN_VALUE: &str = "mean_value";
    pub const MOMENT_BOUND: &str = "moment_bound";
    pub const MOMENT_BOUND_SQRT: &str = "moment_bound_sqrt";
    pub const MGF: &str = "mgf_steinhaus";
    pub const INDICATOR: &str = "indicator_sandwich";
    pub const INDICATOR_COEFFS: &str = "indicator_coefficients";
    pub const PARTITION: &str = "recursive_partition";
    pub const SPLIT: &str = "barrier_split";
    pub const PRIMED: &str = "primed_containment";
    pub const COVER: &str = "increment_cover";
    pub const ONE_POINT: &str = "one_point";
    pub const TWO_POINT: &str = "two_point";
    pub const SHORT_MAX: &str = "short_interval_max";
}
use targets as tg;

pub const EXPERIMENTS: [&str; 12] = [
    "grid",
    "sieve",
    "partial-sums",
    "levelset",
    "moments",
    "surrogate-clt",
    "moment-bounds",
    "mgf",
    "indicator",
    "barriers",
    "two-point",
    "short-max",
];

/// Largest prime-table limit an experiment may request.
const TABLE_CAP: f64 = 4_294_967_296.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out_path: Option<String>,
}

impl ExperimentConfig {
    pub fn new(experiment: &str) -> Self {
        Self {
            experiment: experiment.into(),
            params: BTreeMap::new(),
            seed: None,
            out_path: None,
        }
    }

    pub fn with(mut self, key: &str, value: Value) -> Self {
        self.params.insert(key.into(), value);
        self
    }

    pub fn seeded(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Float,
    Int,
    Bool,
    Model,
    FloatList,
}

#[derive(Debug, Clone, Copy)]
struct Field {
    name: &'static str,
    kind: Kind,
    /// JSON text of the default; `None` means optional without default,
    /// unless `required`.
    default: Option<&'static str>,
    required: bool,
    min: Option<f64>,
    max: Option<f64>,
}

const fn field(name: &'static str, kind: Kind, default: Option<&'static str>) -> Field {
    Field {
        name,
        kind,
        default,
        required: false,
        min: None,
        max: None,
    }
}

impl Field {
    const fn required(mut self) -> Self {
        self.required = true;
        self
    }

    const fn range(mut self, min: f64, max: f64) -> Self {
        self.min = Some(min);
        self.max = Some(max);
        self
    }

    fn check(&self, v: &Value, errs: &mut Vec<String>) {
        let n = self.name;
        let in_range = |x: f64, errs: &mut Vec<String>| {
            if self.min.is_some_and(|m| x < m) || self.max.is_some_and(|m| x > m) || !x.is_finite() {
                errs.push(format!(
                    "`{n}` = {x} outside [{}, {}]",
                    self.min.unwrap_or(f64::NEG_INFINITY),
                    self.max.unwrap_or(f64::INFINITY)
                ));
            }
        };
        match self.kind {
            Kind::Float => match v.as_f64() {
                Some(x) => in_range(x, errs),
                None => errs.push(format!("`{n}` must be a number")),
            },
            Kind::Int => match v.as_u64() {
                Some(x) => in_range(x as f64, errs),
                None => errs.push(format!("`{n}` must be a non-negative integer")),
            },
            Kind::Bool => {
                if !v.is_boolean() {
                    errs.push(format!("`{n}` must be true or false"));
                }
            }
            Kind::Model => {
                if parse_model(v).is_none() {
                    errs.push(format!("`{n}` must be \"steinhaus\" or \"gaussian\""));
                }
            }
            Kind::FloatList => match v.as_array() {
                Some(xs) if !xs.is_empty() => {
                    for x in xs {
                        match x.as_f64() {
                            Some(x) => in_range(x, errs),
                            None => errs.push(format!("`{n}` entries must be numbers")),
                        }
                    }
                }
                _ => errs.push(format!("`{n}` must be a non-empty list of numbers")),
            },
        }
    }
}

fn parse_model(v: &Value) -> Option<ModelKind> {
    match v.as_str()? {
        "steinhaus" => Some(ModelKind::Steinhaus),
        "gaussian" => Some(ModelKind::Gaussian),
        _ => None,
    }
}

/// Validated parameters with defaults filled in.
#[derive(Debug, Clone)]
pub struct Params(BTreeMap<String, Value>);

impl Params {
    fn f(&self, k: &str) -> f64 {
        self.0[k].as_f64().expect("validated")
    }

    fn opt_f(&self, k: &str) -> Option<f64> {
        self.0.get(k).and_then(Value::as_f64)
    }

    fn u(&self, k: &str) -> u64 {
        self.0[k].as_u64().expect("validated")
    }

    fn opt_u(&self, k: &str) -> Option<u64> {
        self.0.get(k).and_then(Value::as_u64)
    }

    fn b(&self, k: &str) -> bool {
        self.0[k].as_bool().expect("validated")
    }

    fn model(&self, k: &str) -> ModelKind {
        parse_model(&self.0[k]).expect("validated")
    }

    fn list(&self, k: &str) -> Vec<f64> {
        self.0[k].as_array().expect("validated").iter().filter_map(Value::as_f64).collect()
    }
}

struct Outcome {
    results: Value,
    checks: Vec<Check>,
}

type Runner = fn(&Params, Option<u64>) -> Result<Outcome>;

struct Experiment {
    tag: &'static str,
    stochastic: bool,
    fields: Vec<Field>,
    /// Cross-field rules beyond the per-field schema.
    extra: fn(&BTreeMap<String, Value>) -> Vec<String>,
    run: Runner,
}

fn no_extra(_: &BTreeMap<String, Value>) -> Vec<String> {
    Vec::new()
}

const GRID_FIELDS: [Field; 5] = [
    field("log_t", Kind::Float, None).required().range(2.718281828459045, 1e300),
    field("k", Kind::Float, Some("1.0")).range(1e-6, 1e6),
    field("v", Kind::Float, None),
    field("gamma", Kind::Float, Some("0.04")).range(1e-9, 0.05),
    field("cutoff", Kind::Float, Some("2.0")).range(1e-9, 1e6),
];

macro_rules! with_grid {
    ($log_t:expr, $k:expr, $cutoff:expr; $($f:expr),* $(,)?) => {
        vec![
            field("log_t", Kind::Float, Some($log_t)).range(2.718281828459045, 1e300),
            field("k", Kind::Float, Some($k)).range(1e-6, 1e6),
            field("v", Kind::Float, None),
            field("gamma", Kind::Float, Some("0.04")).range(1e-9, 0.05),
            field("cutoff", Kind::Float, Some($cutoff)).range(1e-9, 1e6),
            $($f),*
        ]
    };
}

fn registry() -> Vec<Experiment> {
    vec![
        Experiment {
            tag: "grid",
            stochastic: false,
            fields: GRID_FIELDS.to_vec(),
            extra: no_extra,
            run: run_grid,
        },
        Experiment {
            tag: "sieve",
            stochastic: false,
            fields: vec![
                field("limit", Kind::Int, None).required().range(2.0, TABLE_CAP),
                field("sigma", Kind::Float, Some("0.5")).range(0.5, 10.0),
            ],
            extra: no_extra,
            run: run_sieve,
        },
        Experiment {
            tag: "partial-sums",
            stochastic: false,
            fields: with_grid!("10.0", "1.0", "0.5";
                field("t_values", Kind::FloatList, Some("[0.0]")).range(-1e10, 1e10),
                field("lambda", Kind::Float, None).range(0.0, 1e6),
                field("majorant_log_x", Kind::Float, None).range(0.6931471805599453, 22.0),
            ),
            extra: no_extra,
            run: run_partial_sums,
        },
        Experiment {
            tag: "levelset",
            stochastic: true,
            fields: vec![
                field("log_t", Kind::Float, Some("20.0")).range(1.0, 22.0),
                field("v_multipliers", Kind::FloatList, Some("[0.5, 1.0, 1.5, 2.0]")).range(-1e6, 1e6),
                field("n_samples", Kind::Int, Some("20000")).range(1000.0, 1e8),
            ],
            extra: no_extra,
            run: run_levelset,
        },
        Experiment {
            tag: "moments",
            stochastic: true,
            fields: vec![
                field("log_t", Kind::Float, Some("15.0")).range(1.0, 22.0),
                field("k", Kind::Float, Some("1.0")).range(0.0, 10.0),
                field("n_samples", Kind::Int, Some("100000")).range(1000.0, 1e8),
                field("level_lo", Kind::Float, Some("-12.0")).range(-1e3, 1e3),
                field("level_hi", Kind::Float, Some("12.0")).range(-1e3, 1e3),
                field("level_step", Kind::Float, Some("0.01")).range(1e-5, 10.0),
                field("tolerance", Kind::Float, Some("0.05")).range(0.0, 10.0),
            ],
            extra: |m| {
                let lo = m.get("level_lo").and_then(Value::as_f64).unwrap_or(-12.0);
                let hi = m.get("level_hi").and_then(Value::as_f64).unwrap_or(12.0);
                if lo < hi {
                    Vec::new()
                } else {
                    vec![format!("`level_lo` = {lo} must be below `level_hi` = {hi}")]
                }
            },
            run: run_moments,
        },
        Experiment {
            tag: "surrogate-clt",
            stochastic: true,
            fields: vec![
                field("log_t_ell", Kind::Float, Some("13.815510557964274")).range(0.7, 22.0),
                field("smoothing_factor", Kind::Float, Some("25.0")).range(1.0, 1e9),
                field("smoothing_factor_b", Kind::Float, Some("50.0")).range(1.0, 1e9),
                field("model", Kind::Model, Some("\"steinhaus\"")),
                field("trials", Kind::Int, Some("100000")).range(100.0, 1e9),
                field("ks_threshold", Kind::Float, Some("0.01")).range(0.0, 1.0),
            ],
            extra: no_extra,
            run: run_surrogate_clt,
        },
        Experiment {
            tag: "moment-bounds",
            stochastic: true,
            fields: vec![
                field("log_t_lo", Kind::Float, Some("1.0")).range(0.0, 22.0),
                field("log_t_ell", Kind::Float, Some("2.3")).range(0.7, 22.0),
                field("smoothing_factor", Kind::Float, Some("25.0")).range(1.0, 1e9),
                field("log_t_total", Kind::Float, Some("1000.0")).range(1.0, 1e300),
                field("q_values", Kind::FloatList, Some("[1, 2, 3]")).range(1.0, 60.0),
                field("trials", Kind::Int, Some("100000")).range(0.0, 1e9),
                field("ceiling", Kind::Float, Some("2.718281828459045")).range(0.0, 1e300),
            ],
            extra: |m| {
                let lo = m.get("log_t_lo").and_then(Value::as_f64).unwrap_or(1.0);
                let hi = m.get("log_t_ell").and_then(Value::as_f64).unwrap_or(2.3);
                let mut e = Vec::new();
                if lo >= hi {
                    e.push(format!("`log_t_lo` = {lo} must be below `log_t_ell` = {hi}"));
                }
                if let Some(qs) = m.get("q_values").and_then(Value::as_array) {
                    if qs.iter().any(|q| q.as_f64().is_some_and(|q| q.fract() != 0.0)) {
                        e.push("`q_values` entries must be integers".into());
                    }
                }
                e
            },
            run: run_moment_bounds,
        },
        Experiment {
            tag: "mgf",
            stochastic: false,
            fields: vec![
                field("log_t_values", Kind::FloatList, Some("[1000.0, 10000.0, 100000.0]")).range(2.8, 1e300),
                field("cutoffs", Kind::FloatList, Some("[1.0, 2.0, 3.0]")).range(1e-9, 1e6),
                field("lambdas", Kind::FloatList, Some("[0.5, 1.0, 2.0]")).range(0.0, 100.0),
                field("k", Kind::Float, Some("1.0")).range(1e-6, 1e6),
                field("table_limit", Kind::Int, Some("10000000")).range(100.0, TABLE_CAP),
                field("ceiling", Kind::Float, Some("10.0")).range(0.0, 1e300),
            ],
            extra: no_extra,
            run: run_mgf,
        },
        Experiment {
            tag: "indicator",
            stochastic: false,
            fields: vec![
                field("delta", Kind::Float, None).range(3.0, 20.0),
                field("a", Kind::Int, Some("5")).range(3.0, 12.0),
                field("x_range", Kind::Float, None).range(1e-6, 1e6),
                field("n_grid", Kind::Int, Some("10000")).range(1000.0, 1e7),
                field("negative_control", Kind::Bool, Some("true")),
                field("scan_max_delta", Kind::Int, None).range(3.0, 20.0),
            ],
            extra: |m| {
                let mut e = Vec::new();
                match (m.contains_key("delta"), m.contains_key("scan_max_delta")) {
                    (false, false) => e.push("one of `delta` or `scan_max_delta` is required".into()),
                    (true, true) => e.push("`delta` and `scan_max_delta` are mutually exclusive".into()),
                    (false, true) if !m.contains_key("x_range") => {
                        e.push("`x_range` is required with `scan_max_delta`".into())
                    }
                    _ => {}
                }
                e
            },
            run: run_indicator,
        },
        Experiment {
            tag: "barriers",
            stochastic: true,
            fields: with_grid!("9.0", "0.5", "1.0";
                field("trials", Kind::Int, Some("100000")).range(1.0, 1e10),
                field("model", Kind::Model, Some("\"steinhaus\"")),
                field("proxy_log_x", Kind::Float, None).range(0.7, 22.0),
                field("profile_trials", Kind::Int, Some("0")).range(0.0, 1e9),
                field("profile_q", Kind::Int, Some("1")).range(0.0, 200.0),
                field("profile_m", Kind::Int, None).range(1.0, 1e3),
                field("profile_log_t_total", Kind::Float, Some("1000.0")).range(1.0, 1e300),
            ),
            extra: no_extra,
            run: run_barriers,
        },
        Experiment {
            tag: "two-point",
            stochastic: true,
            fields: with_grid!("9.0", "0.5", "1.0";
                field("ell", Kind::Int, Some("1")).range(1.0, 1e3),
                field("m", Kind::Int, Some("1")).range(1.0, 1e3),
                field("m_prime", Kind::Int, Some("2")).range(1.0, 1e3),
                field("trials", Kind::Int, Some("20000")).range(1.0, 1e9),
                field("model", Kind::Model, Some("\"steinhaus\"")),
                field("t_ell_values", Kind::FloatList, Some("[10000.0, 1000000.0]")).range(3.0, 1e8),
                field("factor_m", Kind::Float, Some("50.0")).range(1.0, 1e9),
                field("factor_m_prime", Kind::Float, Some("25.0")).range(1.0, 1e9),
            ),
            extra: no_extra,
            run: run_two_point,
        },
        Experiment {
            tag: "short-max",
            stochastic: true,
            fields: vec![
                field("log_t", Kind::Float, Some("15.0")).range(1.0, 22.0),
                field("gamma_exp", Kind::Float, Some("1.0")).range(0.0, 3.0),
                field("centers", Kind::Int, Some("200")).range(1.0, 1e6),
                field("grid_step", Kind::Float, Some("0.05")).range(1e-6, 0.05),
                field("y_values", Kind::FloatList, Some("[0.0, 1.0, 2.0]")).range(-100.0, 100.0),
            ],
            extra: no_extra,
            run: run_short_max,
        },
    ]
}

/// Check a configuration against its experiment's schema and return the
/// parameters with defaults filled in, or every violation found.
pub fn validate(config: &ExperimentConfig) -> Result<Params> {
    let reg = registry();
    let Some(exp) = reg.iter().find(|e| e.tag == config.experiment) else {
        return Err(LabError::Schema(vec![format!(
            "unknown experiment `{}` (expected one of: {})",
            config.experiment,
            EXPERIMENTS.join(", ")
        )]));
    };
    let mut errs = Vec::new();
    for k in config.params.keys() {
        if !exp.fields.iter().any(|f| f.name == k) {
            errs.push(format!("unknown parameter `{k}` for `{}`", exp.tag));
        }
    }
    let mut filled = BTreeMap::new();
    for f in &exp.fields {
        match (config.params.get(f.name), f.default) {
            (Some(v), _) => {
                f.check(v, &mut errs);
                filled.insert(f.name.to_string(), v.clone());
            }
            (None, Some(d)) => {
                filled.insert(f.name.to_string(), serde_json::from_str(d).expect("defaults are valid JSON"));
            }
            (None, None) if f.required => errs.push(format!("missing required parameter `{}`", f.name)),
            (None, None) => {}
        }
    }
    errs.extend((exp.extra)(&config.params));
    if exp.stochastic && config.seed.is_none() {
        errs.push(format!("`{}` is stochastic and needs a seed", exp.tag));
    }
    if errs.is_empty() {
        Ok(Params(filled))
    } else {
        Err(LabError::Schema(errs))
    }
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Validate, dispatch to the owning module and assemble the report.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let params = validate(config)?;
    let exp = registry().into_iter().find(|e| e.tag == config.experiment).expect("validated");
    let started = unix_now();
    let out = (exp.run)(&params, config.seed)?;
    let echo = ConfigEcho {
        experiment: config.experiment.clone(),
        params: params.0.clone(),
        seed: config.seed,
    };
    let mut report = ExperimentReport::new(echo, out.results, out.checks);
    report.started = started;
    report.finished = unix_now();
    Ok(report)
}

fn grid_from(p: &Params) -> Result<CheckpointGrid> {
    let mut gp = GridParams::new(p.f("log_t"), p.f("k"))
        .with_gamma(p.f("gamma"))
        .with_cutoff(p.f("cutoff"));
    if let Some(v) = p.opt_f("v") {
        gp = gp.with_v(v);
    }
    build_grid(gp)
}

/// A table of all primes up to `e^{log_x}`.
fn table_for(log_x: f64) -> Result<PrimeTable> {
    // One past the ceiling so rounding in exp never leaves the top prime out.
    let x = log_x.exp().ceil() + 1.0;
    if !(x <= TABLE_CAP) {
        return Err(invalid(
            "log_t",
            format!("needs primes up to e^{log_x:.3}, beyond the 2^32 table cap"),
        ));
    }
    sieve_primes((x as u64).max(2))
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report types serialize")
}

fn run_grid(p: &Params, _: Option<u64>) -> Result<Outcome> {
    let g = grid_from(p)?;
    let b = barrier_bounds(&g);
    let n = g.capital_l;
    let mut checks = Vec::new();
    let steps_exact = (2..=n).all(|l| g.t(l) - g.t(l - 1) == 1.0);
    checks.push(Check::hard(tg::CHECKPOINTS, "unit_steps", steps_exact as u8 as f64, None, steps_exact));
    // Scan in log space: ℓ - 1 - ½ log log T ≤ -θ.
    let half = 0.5 * g.params.log_t.ln();
    let mut scan = 1;
    while (scan as f64) - half <= -g.params.cutoff {
        scan += 1;
    }
    let scan = scan + 1;
    checks.push(Check::hard(tg::CHECKPOINTS, "capital_l_scan", scan as f64, None, scan == n));
    let ratio_err = (2..=n).map(|l| (g.beta(l) / g.beta(l - 1) / std::f64::consts::E - 1.0).abs()).fold(0.0, f64::max);
    checks.push(Check::hard(tg::CHECKPOINTS, "beta_ratio_error", ratio_err, Some(1e-12), ratio_err <= 1e-12));
    let c_dec = g.cls.windows(2).all(|w| w[1] < w[0]);
    checks.push(Check::hard(tg::BARRIERS, "c_decreasing", c_dec as u8 as f64, None, c_dec));
    let width_err = (1..=n)
        .map(|l| {
            let (lo, hi) = b.band(l);
            let (lp, hp) = b.primed_band(l);
            let mid = 0.5 * (lo + hi) - g.kappa * g.t(l);
            [hi - lo - 2.0 * g.c(l), hp - hi - 3.0 * g.c(l), lo - lp - 3.0 * g.c(l), mid]
                .iter()
                .map(|e| e.abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    checks.push(Check::hard(tg::BARRIERS, "width_error", width_err, Some(1e-12), width_err <= 1e-12));
    let count_ok = (1..=n).all(|l| g.abscissa_count(l) as f64 <= -g.beta(l).ln() + 1.0);
    checks.push(Check::hard(tg::CHECKPOINTS, "abscissa_count_bound", count_ok as u8 as f64, None, count_ok));
    let key: Vec<f64> = (1..=n).map(|l| key_condition_exponent(&g, l)).collect();
    let key_max = key.iter().cloned().fold(0.0, f64::max);
    checks.push(Check::hard(tg::KEY_CONDITION, "max_exponent", key_max, Some(1.0), key_max < 1.0));
    let lower_increasing = b.lower.windows(2).all(|w| w[1] > w[0]);
    checks.push(Check::reported(tg::BARRIERS, "lower_increasing", lower_increasing as u8 as f64));
    let trunc = (1..=n)
        .map(|l| truncation_index(&g, l).map(|t| json!({"ell": l, "m": t.m, "clamped": t.clamped})))
        .collect::<Result<Vec<_>>>()?;
    Ok(Outcome {
        results: json!({
            "grid": to_value(&g.to_document()),
            "kappa": g.kappa,
            "barriers": to_value(&b),
            "truncation": trunc,
            "key_condition_exponents": key,
            "primed_implication_condition": primed_implication_condition(&g),
        }),
        checks,
    })
}

/// Plain sieve of Eratosthenes over a byte array, for cross-checking.
fn simple_sieve_count(limit: u64) -> usize {
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut count = 0;
    for i in 2..=n {
        if !composite[i] {
            count += 1;
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    count
}

fn run_sieve(p: &Params, _: Option<u64>) -> Result<Outcome> {
    let limit = p.u("limit");
    let table = sieve_primes(limit)?;
    let sigma = p.f("sigma");
    let mut checks = Vec::new();
    if limit <= 100_000 {
        let naive = (2..=limit).filter(|&n| (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)).count();
        checks.push(Check::hard(tg::PRIME_SUPPORT, "trial_division_count", naive as f64, None, naive == table.len()));
    }
    if limit <= 100_000_000 {
        let other = simple_sieve_count(limit);
        checks.push(Check::hard(tg::PRIME_SUPPORT, "second_sieve_count", other as f64, None, other == table.len()));
    }
    let sum = weighted_prime_sum(&table, &PrimeSumForm::new(sigma, 1))?;
    let x = limit as f64;
    let mut mertens = Vec::new();
    let mut decade = 1000.0;
    while decade <= x {
        let s: f64 = table.primes.iter().take_while(|&&q| q as f64 <= decade).map(|&q| 1.0 / q as f64).sum();
        mertens.push(json!({"x": decade, "deviation": s - decade.ln().ln()}));
        decade *= 10.0;
    }
    let log_sum = mertens_log_sum(&table, x)?;
    if limit >= 1_000_000 {
        let r = log_sum.value / x.ln();
        checks.push(Check::hard(tg::MERTENS, "log_sum_ratio", r, Some(1.01), (0.9..=1.01).contains(&r)));
        let s: f64 = table.primes.iter().map(|&q| 1.0 / q as f64).sum();
        let dev = (s - x.ln().ln() - 0.2615).abs();
        checks.push(Check::hard(tg::MERTENS, "mertens_constant_gap", dev, Some(0.05), dev <= 0.05));
    }
    if limit >= 3 {
        let var = weighted_prime_sum(&table, &PrimeSumForm::new(0.5, 2).smoothed(x.ln()).squared())?;
        let bound = 0.5 * x.ln().ln() + 1.0;
        checks.push(Check::hard(tg::VARIANCE, "half_sum_vs_bound", 0.5 * var.value, Some(bound), 0.5 * var.value <= bound));
    }
    Ok(Outcome {
        results: json!({
            "limit": limit,
            "count": table.len(),
            "largest": table.primes.last(),
            "first": table.primes.iter().take(10).collect::<Vec<_>>(),
            "prime_squares": table.prime_squares.len(),
            "inverse_power_sum": to_value(&sum),
            "mertens_deviation": mertens,
            "mertens_log_sum": to_value(&log_sum),
        }),
        checks,
    })
}

fn run_partial_sums(p: &Params, _: Option<u64>) -> Result<Outcome> {
    let g = grid_from(p)?;
    let n = g.capital_l;
    let maj_log_x = p.opt_f("majorant_log_x");
    let table = table_for(g.log_t_at(n).max(maj_log_x.unwrap_or(0.0)))?;
    let lambda0 = solve_lambda0();
    let residual = ((-lambda0).exp() - lambda0 - 0.5 * lambda0 * lambda0).abs();
    let mut checks = vec![
        Check::hard(tg::LAMBDA0, "residual", residual, Some(1e-12), residual < 1e-12),
        Check::hard(tg::LAMBDA0, "lambda0", lambda0, Some(5e-5), (lambda0 - 0.4912).abs() < 5e-5),
    ];
    let ts = p.list("t_values");
    let majorant = match maj_log_x {
        Some(lx) => Some(SoundMajorant::new(
            MajorantParams {
                log_x: lx,
                lambda: p.opt_f("lambda").unwrap_or(lambda0),
                log_t: p.f("log_t"),
            },
            &table,
        )?),
        None => None,
    };
    let mut rows = Vec::new();
    let (mut decomp, mut parity) = (0.0f64, 0.0f64);
    for &t in &ts {
        let mut values = Vec::new();
        for l in 1..=n {
            let mut row = Vec::new();
            for j in l..=n {
                let spec = DirichletPolySpec::from_grid(&g, j, l)?;
                let s = partial_sum(&spec, &table, t)?;
                parity = parity.max((s - partial_sum(&spec, &table, -t)?).abs());
                let prev = if l == 1 {
                    0.0
                } else {
                    partial_sum(&DirichletPolySpec::from_grid(&g, j, l - 1)?, &table, t)?
                };
                let band = DirichletCoeffs::band(&spec, &table, g.log_t_at(l - 1))?.eval(t);
                decomp = decomp.max((s - prev - band).abs());
                row.push(s);
            }
            values.push(row);
        }
        let maj = majorant.as_ref().map(|m| to_value(&m.eval(t)));
        rows.push(json!({"t": t, "values": values, "majorant": maj}));
    }
    checks.push(Check::hard(tg::PARTIAL_SUMS, "decomposition_error", decomp, Some(1e-12), decomp <= 1e-12));
    checks.push(Check::hard(tg::PARTIAL_SUMS, "parity_error", parity, Some(1e-12), parity <= 1e-12));
    Ok(Outcome {
        results: json!({
            "lambda0": lambda0,
            "lambda0_residual": residual,
            "capital_l": n,
            "sums": rows,
        }),
        checks,
    })
}

fn run_levelset(p: &Params, seed: Option<u64>) -> Result<Outcome> {
    let log_t = p.f("log_t");
    let t = log_t.exp();
    let xs = sample_log_abs(t, p.u("n_samples") as usize, seed.expect("validated"))?;
    let scale = (0.5 * log_t.ln()).sqrt();
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    let mut prev = f64::INFINITY;
    let mut monotone = true;
    for v in p.list("v_multipliers") {
        let est = level_set_from_samples(t, v * scale, &xs);
        let tail = gaussian_tail_quadrature(v);
        let z = (est.fraction - tail) / est.std_err.max(f64::MIN_POSITIVE);
        monotone &= est.fraction <= prev;
        prev = est.fraction;
        checks.push(Check::reported(tg::LEVEL_SET, format!("z_vs_gaussian_tail(v={v})"), z));
        rows.push(json!({
            "v": v,
            "level": v * scale,
            "estimate": to_value(&est),
            "gaussian_tail": tail,
            "z": z,
        }));
    }
    checks.push(Check::hard(tg::LEVEL_SET, "monotone_in_v", monotone as u8 as f64, None, monotone));
    Ok(Outcome {
        results: json!({"t_log": log_t, "seed": seed, "levels": rows}),
        checks,
    })
}

fn run_moments(p: &Params, seed: Option<u64>) -> Result<Outcome> {
    let t = p.f("log_t").exp();
    let k = p.f("k");
    let xs = sample_log_abs(t, p.u("n_samples") as usize, seed.expect("validated"))?;
    let (lo, hi, step) = (p.f("level_lo"), p.f("level_hi"), p.f("level_step"));
    let count = ((hi - lo) / step).ceil() as usize;
    let levels: Vec<f64> = (0..=count).map(|i| (lo + i as f64 * step).min(hi)).collect();
    let mut levels = levels;
    levels.dedup();
    let (direct, ibp) = moment_via_levelsets_from(&xs, k, &levels)?;
    let rel = (direct - ibp).abs() / direct.abs().max(f64::MIN_POSITIVE);
    let tol = p.f("tolerance");
    // Levels at the order statistics make the identity exact.
    let mut order: Vec<f64> = xs.iter().cloned().filter(|x| x.is_finite()).collect();
    order.sort_by(|a, b| a.partial_cmp(b).unwrap());
    order.dedup();
    let mut exact_levels = vec![order[0] - 1.0];
    exact_levels.extend(order.iter().cloned());
    let (d2, i2) = moment_via_levelsets_from(&xs, k, &exact_levels)?;
    let rel_exact = (d2 - i2).abs() / d2.abs().max(f64::MIN_POSITIVE);
    let (z0, z1) = moment_via_levelsets_from(&xs, 0.0, &levels)?;
    let checks = vec![
        Check::hard(tg::IBP, "relative_gap", rel, Some(tol), rel <= tol),
        Check::hard(tg::IBP, "order_statistics_gap", rel_exact, Some(1e-9), rel_exact <= 1e-9),
        Check::hard(tg::IBP, "k0_identity", (z0 - 1.0).abs().max((z1 - 1.0).abs()), Some(0.0), z0 == 1.0 && z1 == 1.0),
    ];
    Ok(Outcome {
        results: json!({
            "t_log": p.f("log_t"),
            "k": k,
            "direct": direct,
            "level_set": ibp,
            "relative_gap": rel,
            "levels": levels.len(),
            "max_log_abs": order.last(),
        }),
        checks,
    })
}

fn smoothed_spec(log_tell: f64, factor: f64) -> Result<DirichletPolySpec> {
    let log_tj = factor * log_tell;
    DirichletPolySpec::new(1, 1, 0.5 + PARTIAL_SUM_LAMBDA / log_tj, log_tj, log_tell)
}

fn run_surrogate_clt(p: &Params, seed: Option<u64>) -> Result<Outcome> {
    let log_tell = p.f("log_t_ell");
    let table = table_for(log_tell)?;
    let a = smoothed_spec(log_tell, p.f("smoothing_factor"))?;
    let b = smoothed_spec(log_tell, p.f("smoothing_factor_b"))?;
    let stats = analytic_second_order(&a, &b, &table)?;
    let c = DirichletCoeffs::new(&a, &table)?;
    let model = p.model("model");
    let trials = p.u("trials") as usize;
    let sampler = ModelSampler::new(model, seed.expect("validated"), "random_models");
    let sums: Vec<f64> = sampler.sample_sums(std::slice::from_ref(&c), trials).into_iter().map(|v| v[0]).collect();
    let (mean, mean_se) = mean_and_se(&sums);
    let (var, var_se) = variance_and_se(&sums);
    let sd = stats.variance.sqrt();
    let normalized: Vec<f64> = sums.iter().map(|x| x / sd).collect();
    let ks = ks_statistic_normal(&normalized);
    let thr = p.f("ks_threshold");
    let checks = vec![
        Check::hard(tg::SELBERG, "ks_statistic", ks, Some(thr), ks < thr),
        Check::hard(
            tg::VARIANCE,
            "analytic_minus_predicted",
            stats.variance - stats.predicted,
            Some(1.0),
            stats.variance_within_slack(),
        ),
        Check::hard(
            tg::COVARIANCE,
            "covariance_minus_predicted",
            stats.covariance - stats.predicted,
            Some(2.0),
            (stats.covariance - stats.predicted).abs() <= 2.0,
        ),
        Check::hard(
            tg::VARIANCE,
            "monte_carlo_z",
            (var - stats.variance) / var_se,
            Some(3.0),
            (var - stats.variance).abs() <= 3.0 * var_se,
        ),
        Check::reported(tg::SELBERG, "mean_z", mean / mean_se),
    ];
    Ok(Outcome {
        results: json!({
            "log_t_ell": log_tell,
            "model": model.tag(),
            "trials": trials,
            "primes": c.amp.len(),
            "second_order": to_value(&stats),
            "monte_carlo_variance": var,
            "monte_carlo_variance_se": var_se,
            "mean": mean,
            "ks_statistic": ks,
        }),
        checks,
    })
}

fn run_moment_bounds(p: &Params, seed: Option<u64>) -> Result<Outcome> {
    let log_tell = p.f("log_t_ell");
    let log_t_lo = p.f("log_t_lo");
    let table = table_for(log_tell)?;
    let inc = IncrementSpec {
        abscissa: smoothed_spec(log_tell, p.f("smoothing_factor"))?,
        log_t_lo,
        log_t_total: p.f("log_t_total"),
    };
    let c = inc.coeffs(&table)?;
    let comps = prime_components(&c);
    let seed = seed.expect("validated");
    let trials = p.u("trials") as usize;
    let ceiling = p.f("ceiling");
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    let mut max_ratio = 0.0f64;
    for q in p.list("q_values") {
        let q = q as u32;
        let s = moment_bound_check(&inc, &table, q, ModelKind::Steinhaus, trials, seed, ceiling)?;
        let g = moment_bound_check(&inc, &table, q, ModelKind::Gaussian, trials, seed, f64::INFINITY)?;
        max_ratio = max_ratio.max(s.ratio);
        let order = 2 * q as usize;
        let torus = if !comps.is_empty() && comps.len() <= 4 {
            let n = 2 * order + 2;
            let v = torus_expectation(comps.len(), n, |th| {
                comps
                    .iter()
                    .zip(th)
                    .map(|(&(a, b), &t)| a * t.cos() + b * (2.0 * t).cos())
                    .sum::<f64>()
                    .powi(order as i32)
            })?;
            let gap = (v - s.exact).abs();
            checks.push(Check::hard(tg::MEAN_VALUE, format!("torus_gap(q={q})"), gap, Some(1e-6), gap <= 1e-6));
            Some(v)
        } else {
            None
        };
        if q == 1 {
            let gap = (s.exact - coeff_covariance(&c, &c)).abs();
            checks.push(Check::hard(tg::VARIANCE, "second_moment_is_variance", gap, Some(1e-12), gap <= 1e-12));
        }
        checks.push(Check::hard(tg::MOMENT_BOUND, format!("steinhaus(q={q})"), s.ratio, Some(ceiling), s.pass));
        let z = |r: &crate::models::MomentBoundReport, target: f64| match (r.empirical, r.empirical_std_err) {
            (Some(m), Some(se)) => (m - target) / se,
            _ => 0.0,
        };
        checks.push(Check::hard(tg::MOMENT_BOUND, format!("steinhaus_mc_z(q={q})"), z(&s, s.exact), Some(4.0), s.pass));
        checks.push(Check::hard(tg::MOMENT_BOUND, format!("gaussian_mc_z(q={q})"), z(&g, g.gaussian), Some(4.0), g.pass));
        let t1 = inc.scale_gap();
        rows.push(json!({
            "q": q,
            "steinhaus": to_value(&s),
            "gaussian": to_value(&g),
            "torus": torus,
            "sqrt_bound_constant": sqrt_bound_constant(s.exact, q, t1),
        }));
    }
    checks.push(Check::reported(tg::MOMENT_BOUND, "max_ratio", max_ratio));
    Ok(Outcome {
        results: json!({
            "log_t_lo": log_t_lo,
            "log_t_ell": log_tell,
            "support_primes": comps.len(),
            "exact_second_moment": exact_moments(&c, 2)[2],
            "moments": rows,
        }),
        checks,
    })
}

fn run_mgf(p: &Params, _: Option<u64>) -> Result<Outcome> {
    let table = sieve_primes(p.u("table_limit"))?;
    let ceiling = p.f("ceiling");
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    let mut max_ratio = 0.0f64;
    for &log_t in &p.list("log_t_values") {
        for &cutoff in &p.list("cutoffs") {
            let g = match build_grid(GridParams::new(log_t, p.f("k")).with_cutoff(cutoff)) {
                Ok(g) => g,
                Err(e) => {
                    skipped.push(json!({"log_t": log_t, "cutoff": cutoff, "reason": e.to_string()}));
                    continue;
                }
            };
            let n = g.capital_l;
            for &lambda in &p.list("lambdas") {
                for k in 1..n {
                    for l in k + 1..=n {
                        let r = mgf_bound_check(&g, k, l, n, lambda, &table)?;
                        let ratio = r.ratio.unwrap_or(f64::NAN);
                        max_ratio = max_ratio.max(ratio);
                        rows.push(json!({"log_t": log_t, "cutoff": cutoff, "report": to_value(&r)}));
                    }
                }
            }
        }
    }
    let gap = [0.5, 1.0, 2.0, 5.0].iter().map(|&x| bessel_identity_gap(x)).fold(0.0, f64::max);
    let mut checks = vec![
        Check::hard(tg::MGF, "bessel_identity_gap", gap, Some(1e-12), gap <= 1e-12),
        Check::hard(tg::MGF, "max_ratio", max_ratio, Some(ceiling), !rows.is_empty() && max_ratio <= ceiling),
    ];
    if let Some(g) = p
        .list("log_t_values")
        .iter()
        .find_map(|&lt| build_grid(GridParams::new(lt, p.f("k")).with_cutoff(p.list("cutoffs")[0])).ok())
    {
        if g.capital_l >= 2 {
            let r = mgf_bound_check(&g, 1, 2, g.capital_l, 0.0, &table)?;
            let ratio = r.ratio.unwrap_or(f64::NAN);
            checks.push(Check::hard(tg::MGF, "lambda_zero_ratio", ratio, Some(0.0), ratio == 1.0));
        }
    }
    Ok(Outcome {
        results: json!({"ratios": rows, "skipped_grids": skipped, "max_ratio": max_ratio}),
        checks,
    })
}

fn run_indicator(p: &Params, _: Option<u64>) -> Result<Outcome> {
    let a = p.u("a") as u32;
    let n_grid = p.u("n_grid") as usize;
    if let Some(max_delta) = p.opt_u("scan_max_delta") {
        let scan = smallest_valid_delta(a, p.f("x_range"), max_delta as u32, n_grid);
        let found = scan.smallest.is_some();
        return Ok(Outcome {
            checks: vec![Check::reported(tg::INDICATOR, "smallest_valid_delta", scan.smallest.unwrap_or(f64::NAN))],
            results: json!({"scan": to_value(&scan), "found": found}),
        });
    }
    let delta = p.f("delta");
    let x_range = p.opt_f("x_range").unwrap_or(10.0 * delta);
    let poly = build_indicator_poly(delta, a, x_range)?;
    let audit = poly.audit();
    let report = validate_sandwich(&poly, n_grid);
    let finer = validate_sandwich(&poly, 2 * n_grid);
    let eps = poly.eps();
    let inside = eval_enclosure(&poly, 0.5 / delta);
    let outside = eval_enclosure(&poly, 2.0 / delta);
    let stability = (finer.max_excess - report.max_excess).abs();
    let mut checks = vec![
        Check::hard(
            tg::INDICATOR,
            "violations",
            (report.lower_violations + report.upper_violations) as f64,
            Some(0.0),
            report.valid(),
        ),
        Check::hard(tg::INDICATOR_COEFFS, "audit", audit.ok() as u8 as f64, None, audit.ok()),
        Check::hard(tg::INDICATOR, "inside_window", inside.lo, Some(1.0 - eps), inside.lo >= 1.0 - eps),
        Check::hard(tg::INDICATOR, "outside_window", outside.hi, Some(eps), outside.hi <= eps),
        Check::hard(tg::INDICATOR, "grid_stability", stability, Some(1e-6), stability < 1e-6),
    ];
    let mut control = Value::Null;
    if p.b("negative_control") {
        let mut bad = poly.clone();
        bad.corrupt_coefficient(bad.largest_stored(), 2.0)?;
        let r = validate_sandwich(&bad, n_grid);
        checks.push(Check::hard(
            tg::INDICATOR,
            "control_upper_violations",
            r.upper_violations as f64,
            Some(0.0),
            r.upper_violations > 0,
        ));
        control = to_value(&r);
    }
    Ok(Outcome {
        results: json!({
            "polynomial": to_value(&poly.to_document()),
            "audit": to_value(&audit),
            "sandwich": to_value(&report),
            "sandwich_doubled": to_value(&finer),
            "negative_control": control,
        }),
        checks,
    })
}

fn run_barriers(p: &Params, seed: Option<u64>) -> Result<Outcome> {
    let g = grid_from(p)?;
    let n = g.capital_l;
    let proxy = p.opt_f("proxy_log_x").unwrap_or(g.params.log_t);
    let table = table_for(g.log_t_at(n).max(proxy))?;
    let model = TrajectoryModel::new(&g, &table, proxy)?;
    let seed = seed.expect("validated");
    let sampler = ModelSampler::new(p.model("model"), seed, "barrier_lab");
    let audit = audit_model_batch(&model, &sampler, p.u("trials"), g.params.v);
    let cond = primed_implication_condition(&g);
    let inc = IncrementGrid::new(&g, &model.barriers);
    let mut checks = vec![
        Check::hard(tg::PARTITION, "partition_exact", audit.partition.partition_exact() as u8 as f64, None, audit.partition.partition_exact()),
        Check::hard(tg::SPLIT, "split_covers", audit.partition.split_covers() as u8 as f64, None, audit.partition.split_covers()),
        Check::hard(tg::COVER, "cover_failures", audit.cover_failures as f64, Some(0.0), audit.cover_failures == 0),
    ];
    if cond.iter().all(|&c| c) {
        checks.push(Check::hard(tg::PRIMED, "implication_failures", audit.implication_failures as f64, Some(0.0), audit.implication_failures == 0));
    } else {
        checks.push(Check::reported(tg::PRIMED, "implication_failures", audit.implication_failures as f64));
    }
    let mut profile = Value::Null;
    let profile_trials = p.u("profile_trials");
    if profile_trials > 0 {
        let cfg = OnePointConfig {
            ell: 1,
            j: 1,
            m: p.opt_u("profile_m").map(|m| m as usize).unwrap_or(n),
            q: p.u("profile_q") as u32,
            u_values: default_u_values(&model, 1),
            log_t_total: p.f("profile_log_t_total"),
        };
        let r = one_point_profile(&model, &table, &sampler, profile_trials, &cfg)?;
        checks.push(Check::reported(tg::ONE_POINT, "max_ratio", r.max_ratio));
        checks.push(Check::reported(tg::ONE_POINT, "independence_z", r.independence.z()));
        profile = to_value(&r);
    }
    Ok(Outcome {
        results: json!({
            "grid": to_value(&g.to_document()),
            "barriers": to_value(&model.barriers),
            "model": p.model("model").tag(),
            "audit": to_value(&audit),
            "primed_implication_condition": cond,
            "increment_grid": {"mesh": inc.mesh, "delta": inc.delta, "inv_sum": inc.inv_sum()},
            "one_point": profile,
        }),
        checks,
    })
}

fn run_two_point(p: &Params, seed: Option<u64>) -> Result<Outcome> {
    let g = grid_from(p)?;
    let n = g.capital_l;
    let tells = p.list("t_ell_values");
    let max_tell = tells.iter().cloned().fold(0.0, f64::max);
    let table = table_for(g.log_t_at(n).max(g.params.log_t).max(max_tell.ln()))?;
    let model = TrajectoryModel::new(&g, &table, g.params.log_t)?;
    let sampler = ModelSampler::new(p.model("model"), seed.expect("validated"), "barrier_lab");
    let ell = p.u("ell") as usize;
    if ell > n {
        return Err(invalid("ell", format!("{ell} exceeds 𝓛 = {n}")));
    }
    let u = default_u_values(&model, ell);
    let cfg = TwoPointConfig {
        ell,
        m: p.u("m") as usize,
        m_prime: p.u("m_prime") as usize,
        u_values: u.clone(),
        v_values: u,
    };
    let r = two_point_profile(&model, &table, &sampler, p.u("trials"), &cfg)?;
    let mut checks = vec![
        Check::hard(tg::TWO_POINT, "grid_covariance_difference", r.covariance.difference, Some(2.0), r.covariance.holds()),
        Check::reported(tg::TWO_POINT, "correlation", r.correlation),
        Check::reported(tg::TWO_POINT, "max_ratio", r.max_ratio),
    ];
    let mut pairs = Vec::new();
    for &t in &tells {
        let l = t.ln();
        let d = covariance_difference(&table, l, p.f("factor_m") * l, p.f("factor_m_prime") * l)?;
        checks.push(Check::hard(tg::TWO_POINT, format!("covariance_difference(T_ell={t})"), d.difference, Some(2.0), d.holds()));
        pairs.push(json!({"t_ell": t, "result": to_value(&d)}));
    }
    Ok(Outcome {
        results: json!({"profile": to_value(&r), "covariance_pairs": pairs}),
        checks,
    })
}

fn run_short_max(p: &Params, seed: Option<u64>) -> Result<Outcome> {
    let log_t = p.f("log_t");
    let t = log_t.exp();
    let gamma = p.f("gamma_exp");
    let streams = StreamFactory::new(seed.expect("validated"), "short_max");
    let centers = p.u("centers");
    let maxima = (0..centers)
        .map(|i| short_interval_max(t * (1.0 + streams.trial(i).uniform()), gamma, log_t, p.f("grid_step")))
        .collect::<Result<Vec<_>>>()?;
    let benchmark = maxima[0].benchmark;
    let r = (1.0 + gamma).sqrt();
    let mut rows = Vec::new();
    let mut prev = f64::INFINITY;
    let mut monotone = true;
    let mut checks = Vec::new();
    let mut ys = p.list("y_values");
    ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for y in ys {
        let frac = maxima.iter().filter(|m| m.max_abs > y.exp() * benchmark).count() as f64 / centers as f64;
        monotone &= frac <= prev;
        prev = frac;
        let shape = (-2.0 * y * r).exp();
        checks.push(Check::reported(tg::SHORT_MAX, format!("fraction(y={y})"), frac));
        rows.push(json!({"y": y, "fraction": frac, "shape": shape}));
    }
    checks.push(Check::hard(tg::SHORT_MAX, "monotone_in_y", monotone as u8 as f64, None, monotone));
    let mut ratios: Vec<f64> = maxima.iter().map(|m| m.max_abs / benchmark).collect();
    ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(Outcome {
        results: json!({
            "t_log": log_t,
            "gamma_exp": gamma,
            "benchmark": benchmark,
            "half_width": maxima[0].half_width,
            "grid_points": maxima[0].grid_points,
            "median_ratio": ratios[ratios.len() / 2],
            "exceedances": rows,
        }),
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_tag_is_registered_once() {
        let reg = registry();
        assert_eq!(reg.len(), EXPERIMENTS.len());
        for t in EXPERIMENTS {
            assert_eq!(reg.iter().filter(|e| e.tag == t).count(), 1, "{t}");
        }
    }

    #[test]
    fn defaults_parse_and_satisfy_their_own_schema() {
        for e in registry() {
            for f in &e.fields {
                if let Some(d) = f.default {
                    let v: Value = serde_json::from_str(d).unwrap();
                    let mut errs = Vec::new();
                    f.check(&v, &mut errs);
                    assert!(errs.is_empty(), "{}.{}: {errs:?}", e.tag, f.name);
                }
            }
        }
    }

    #[test]
    fn all_violations_are_listed() {
        let cfg = ExperimentConfig::new("levelset")
            .with("log_t", json!("big"))
            .with("n_samples", json!(10))
            .with("bogus", json!(1));
        match validate(&cfg) {
            Err(LabError::Schema(e)) => assert_eq!(e.len(), 4, "{e:?}"),
            other => panic!("{other:?}"),
        }
    }
}
