//! Python bindings: grids, prime tables, prime sums, ζ on the half line,
//! surrogate sampling and the experiment runner.

use critline::dirichlet::{partial_sum as core_partial_sum, DirichletCoeffs, DirichletPolySpec};
use critline::experiments::{run_experiment as core_run, validate, ExperimentConfig, EXPERIMENTS};
use critline::grid::{barrier_bounds, build_grid, truncation_index, GridParams};
use critline::models::{gaussian_moment as core_gaussian_moment, ks_statistic_normal, ModelKind, ModelSampler};
use critline::primes::{mertens_log_sum, sieve_primes};
use critline::report::{render, Format};
use critline::zeta::{hardy_z_rs, level_set_measure, sample_log_abs, zeta_half_line as core_zeta};
use critline::LabError;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: LabError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn model_kind(name: &str) -> PyResult<ModelKind> {
    match name {
        "steinhaus" => Ok(ModelKind::Steinhaus),
        "gaussian" => Ok(ModelKind::Gaussian),
        _ => Err(PyValueError::new_err(format!("unknown model `{name}` (steinhaus or gaussian)"))),
    }
}

/// Multiscale checkpoint grid `β_ℓ`, `t_ℓ`, `c_ℓ` with its barrier bands.
#[pyclass(name = "CheckpointGrid", frozen)]
struct PyGrid(critline::grid::CheckpointGrid);

#[pymethods]
impl PyGrid {
    #[new]
    #[pyo3(signature = (log_t, k, cutoff=2.0, gamma=None, v=None))]
    fn new(log_t: f64, k: f64, cutoff: f64, gamma: Option<f64>, v: Option<f64>) -> PyResult<Self> {
        let mut p = GridParams::new(log_t, k).with_cutoff(cutoff);
        if let Some(g) = gamma {
            p = p.with_gamma(g);
        }
        if let Some(v) = v {
            p = p.with_v(v);
        }
        build_grid(p).map(Self).map_err(err)
    }

    #[getter]
    fn capital_l(&self) -> usize {
        self.0.capital_l
    }

    #[getter]
    fn kappa(&self) -> f64 {
        self.0.kappa
    }

    #[getter]
    fn betas(&self) -> Vec<f64> {
        self.0.betas.clone()
    }

    #[getter]
    fn tls(&self) -> Vec<f64> {
        self.0.tls.clone()
    }

    #[getter]
    fn cls(&self) -> Vec<f64> {
        self.0.cls.clone()
    }

    /// `(lower, upper)` per level.
    fn barriers(&self) -> Vec<(f64, f64)> {
        let b = barrier_bounds(&self.0);
        (1..=b.len()).map(|l| b.band(l)).collect()
    }

    /// `(lower′, upper′)` per level.
    fn primed_barriers(&self) -> Vec<(f64, f64)> {
        let b = barrier_bounds(&self.0);
        (1..=b.len()).map(|l| b.primed_band(l)).collect()
    }

    /// `(m, clamped)` for 1-based `ell`.
    fn truncation_index(&self, ell: usize) -> PyResult<(usize, bool)> {
        let t = truncation_index(&self.0, ell).map_err(err)?;
        Ok((t.m, t.clamped))
    }

    fn __repr__(&self) -> String {
        format!("CheckpointGrid(log_t={}, capital_l={})", self.0.params.log_t, self.0.capital_l)
    }
}

/// Primes up to a limit, from a segmented sieve.
#[pyclass(name = "PrimeTable", frozen)]
struct PyPrimes(critline::primes::PrimeTable);

#[pymethods]
impl PyPrimes {
    #[new]
    fn new(limit: u64) -> PyResult<Self> {
        sieve_primes(limit).map(Self).map_err(err)
    }

    #[getter]
    fn limit(&self) -> u64 {
        self.0.limit
    }

    fn primes(&self) -> Vec<u64> {
        self.0.primes.clone()
    }

    fn count_upto(&self, x: f64) -> usize {
        self.0.count_upto(x)
    }

    /// `Σ_{p ≤ x} log p / p`.
    fn mertens(&self, x: f64) -> PyResult<f64> {
        mertens_log_sum(&self.0, x).map(|s| s.value).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

/// Smoothed prime sum `Re Σ a_j(p) p^{-σ-it}` plus its square terms.
#[pyfunction]
#[pyo3(signature = (table, t, sigma, log_tell, log_tj=f64::INFINITY, j=1, ell=1))]
fn partial_sum(table: &PyPrimes, t: f64, sigma: f64, log_tell: f64, log_tj: f64, j: usize, ell: usize) -> PyResult<f64> {
    let spec = DirichletPolySpec::new(j, ell, sigma, log_tj, log_tell).map_err(err)?;
    core_partial_sum(&spec, &table.0, t).map_err(err)
}

/// `ζ(1/2 + it)` as `(re, im, log|ζ|, method, error estimate)`.
#[pyfunction]
fn zeta_half_line(t: f64) -> PyResult<(f64, f64, f64, &'static str, f64)> {
    let z = core_zeta(t).map_err(err)?;
    Ok((z.value.re, z.value.im, z.log_abs, z.method.tag(), z.est_error))
}

/// Hardy's `Z(t)` by Riemann–Siegel, with its error estimate.
#[pyfunction]
fn hardy_z(t: f64) -> (f64, f64) {
    hardy_z_rs(t)
}

/// `log|ζ(1/2+it)|` at `n` uniform heights in `[t, 2t]`.
#[pyfunction]
fn sample_log_zeta(py: Python<'_>, t: f64, n: usize, seed: u64) -> PyResult<Vec<f64>> {
    py.detach(|| sample_log_abs(t, n, seed)).map_err(err)
}

/// Fraction of `[t, 2t]` where `log|ζ| > v`, as `(fraction, std_err)`.
#[pyfunction]
fn level_set(py: Python<'_>, t: f64, v: f64, n_samples: usize, seed: u64) -> PyResult<(f64, f64)> {
    let e = py.detach(|| level_set_measure(t, v, n_samples, seed)).map_err(err)?;
    Ok((e.fraction, e.std_err))
}

/// Draws of the random-model prime sum at abscissa `σ` up to `e^{log_tell}`.
#[pyfunction]
#[pyo3(signature = (table, sigma, log_tell, trials, seed, model="steinhaus", log_tj=f64::INFINITY))]
fn sample_model_sums(
    py: Python<'_>,
    table: &PyPrimes,
    sigma: f64,
    log_tell: f64,
    trials: usize,
    seed: u64,
    model: &str,
    log_tj: f64,
) -> PyResult<Vec<f64>> {
    let kind = model_kind(model)?;
    let spec = DirichletPolySpec::new(1, 1, sigma, log_tj, log_tell).map_err(err)?;
    let c = DirichletCoeffs::new(&spec, &table.0).map_err(err)?;
    Ok(py.detach(|| {
        ModelSampler::new(kind, seed, "random_models")
            .sample_sums(std::slice::from_ref(&c), trials)
            .into_iter()
            .map(|v| v[0])
            .collect()
    }))
}

/// Kolmogorov–Smirnov distance of the standardized sample from `N(0, 1)`.
#[pyfunction]
fn ks_normal(xs: Vec<f64>) -> f64 {
    ks_statistic_normal(&xs)
}

/// `(2q-1)!! variance^q`.
#[pyfunction]
fn gaussian_moment(variance: f64, q: u32) -> f64 {
    core_gaussian_moment(variance, q)
}

/// Registered experiment tags.
#[pyfunction]
fn experiments() -> Vec<&'static str> {
    EXPERIMENTS.to_vec()
}

/// Runs an experiment; `params_json` is the JSON object of parameters.
/// Returns the canonical report text.
#[pyfunction]
#[pyo3(signature = (tag, params_json="{}", seed=None, format="json"))]
fn run_experiment(py: Python<'_>, tag: &str, params_json: &str, seed: Option<u64>, format: &str) -> PyResult<String> {
    let params = serde_json::from_str(params_json).map_err(|e| PyValueError::new_err(format!("params: {e}")))?;
    let fmt: Format = format.parse().map_err(PyValueError::new_err)?;
    let mut config = ExperimentConfig::new(tag);
    config.params = params;
    config.seed = seed;
    validate(&config).map_err(err)?;
    py.detach(|| core_run(&config).and_then(|r| render(&r, fmt))).map_err(err)
}

#[pymodule]
#[pyo3(name = "critline")]
fn critline_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyPrimes>()?;
    m.add_function(wrap_pyfunction!(partial_sum, m)?)?;
    m.add_function(wrap_pyfunction!(zeta_half_line, m)?)?;
    m.add_function(wrap_pyfunction!(hardy_z, m)?)?;
    m.add_function(wrap_pyfunction!(sample_log_zeta, m)?)?;
    m.add_function(wrap_pyfunction!(level_set, m)?)?;
    m.add_function(wrap_pyfunction!(sample_model_sums, m)?)?;
    m.add_function(wrap_pyfunction!(ks_normal, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_moment, m)?)?;
    m.add_function(wrap_pyfunction!(experiments, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
