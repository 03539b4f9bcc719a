//! Steinhaus and Gaussian surrogates for the prime sums: sampling, exact
//! second-order statistics, exact moments and the moment generating
//! function.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dirichlet::{DirichletCoeffs, DirichletPolySpec};
use crate::error::{LabError, Result};
use crate::numeric::{bessel_i0, double_factorial_odd, ln_bessel_i0, normal_cdf, GaussRule, KahanSum};
use crate::primes::PrimeTable;
use crate::rng::{complex_normal, StreamFactory, AUX_STREAM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// `X(p)` uniform on the unit circle, `X(p²) = X(p)²`.
    Steinhaus,
    /// `X(p)` replaced by a standard complex normal `Z(p)`; the square
    /// terms get an independent `Z'(p)` so the sum is exactly Gaussian.
    Gaussian,
}

impl ModelKind {
    pub fn tag(&self) -> &'static str {
        match self {
            Self::Steinhaus => "steinhaus",
            Self::Gaussian => "gaussian",
        }
    }
}

/// One sample ω of the model, indexed by prime-table position.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseAssignment {
    pub model: ModelKind,
    pub phases: Vec<f64>,
    /// `(Z(p), Z'(p))`, present iff the model is Gaussian.
    pub gaussian_values: Option<Vec<(Complex64, Complex64)>>,
}

impl PhaseAssignment {
    /// Steinhaus assignment with every phase equal to `angle`.
    pub fn constant(n: usize, angle: f64) -> Self {
        Self {
            model: ModelKind::Steinhaus,
            phases: vec![angle; n],
            gaussian_values: None,
        }
    }

    pub fn draw(sampler: &ModelSampler, trial: u64, n: usize) -> Self {
        match sampler.model {
            ModelKind::Steinhaus => {
                let mut s = sampler.main.trial(trial);
                Self {
                    model: ModelKind::Steinhaus,
                    phases: (0..n).map(|_| TAU * s.uniform()).collect(),
                    gaussian_values: None,
                }
            }
            ModelKind::Gaussian => {
                let mut s = sampler.main.trial(trial);
                let mut a = sampler.main.trial(trial | AUX_STREAM);
                let vals: Vec<(Complex64, Complex64)> = (0..n)
                    .map(|_| {
                        let (u, v) = s.pair();
                        let (x, y) = complex_normal(u, v);
                        let (u, v) = a.pair();
                        let (x2, y2) = complex_normal(u, v);
                        (Complex64::new(x, y), Complex64::new(x2, y2))
                    })
                    .collect();
                Self {
                    model: ModelKind::Gaussian,
                    phases: vals.iter().map(|z| z.0.arg().rem_euclid(TAU)).collect(),
                    gaussian_values: Some(vals),
                }
            }
        }
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    /// `(Re X(p), Re X(p²))` per prime.
    pub fn realize(&self) -> (Vec<f64>, Vec<f64>) {
        match &self.gaussian_values {
            None => self.phases.iter().map(|&t| (t.cos(), (2.0 * t).cos())).unzip(),
            Some(v) => v.iter().map(|(z, w)| (z.re, w.re)).unzip(),
        }
    }
}

/// `S_ℓ^{(j)}` with `cos(t log p)` replaced by `Re X(p)`.
pub fn model_partial_sum(
    spec: &DirichletPolySpec,
    table: &PrimeTable,
    assignment: &PhaseAssignment,
) -> Result<f64> {
    if assignment.len() != table.len() {
        return Err(LabError::CoverageMismatch {
            assigned: assignment.len(),
            table: table.len(),
        });
    }
    let c = DirichletCoeffs::new(spec, table)?;
    let (lin, sq) = assignment.realize();
    Ok(c.eval_with(&lin, &sq))
}

/// Draws `(Re X(p), Re X(p²))` for the first primes of a trial straight
/// into buffers. Steinhaus uses one 64-bit word per prime, the Gaussian
/// model two words per prime on the main stream and two on the auxiliary
/// stream for the squares.
#[derive(Debug, Clone)]
pub struct ModelSampler {
    pub model: ModelKind,
    pub seed: u64,
    main: StreamFactory,
}

impl ModelSampler {
    pub fn new(model: ModelKind, seed: u64, module: &str) -> Self {
        let name = format!("{module}/{}", model.tag());
        Self {
            model,
            seed,
            main: StreamFactory::new(seed, &name),
        }
    }

    /// Fill `lin` (all of it) and `sq[..n_sq]` for one trial.
    pub fn fill(&self, trial: u64, lin: &mut [f64], sq: &mut [f64], n_sq: usize) {
        let mut s = self.main.trial(trial);
        match self.model {
            ModelKind::Steinhaus => {
                for (i, x) in lin.iter_mut().enumerate() {
                    let c = (TAU * s.uniform()).cos();
                    *x = c;
                    if i < n_sq {
                        sq[i] = 2.0 * c * c - 1.0;
                    }
                }
            }
            ModelKind::Gaussian => {
                for x in lin.iter_mut() {
                    let (u, v) = s.pair();
                    *x = complex_normal(u, v).0;
                }
                let mut a = self.main.trial(trial | AUX_STREAM);
                for y in sq[..n_sq].iter_mut() {
                    let (u, v) = a.pair();
                    *y = complex_normal(u, v).0;
                }
            }
        }
    }

    /// Run `f` on every trial in `0..trials` with freshly drawn buffers of
    /// `n_lin` linear and `n_sq` square values; results in trial order.
    pub fn map_trials<T, F>(&self, trials: usize, n_lin: usize, n_sq: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64, &[f64], &[f64]) -> T + Sync,
    {
        (0..trials as u64)
            .into_par_iter()
            .map_init(
                || (vec![0.0; n_lin], vec![0.0; n_sq.max(1)]),
                |(lin, sq), trial| {
                    self.fill(trial, lin, sq, n_sq);
                    f(trial, lin, sq)
                },
            )
            .collect()
    }

    /// Sample every coefficient set on each trial.
    pub fn sample_sums(&self, coeffs: &[DirichletCoeffs], trials: usize) -> Vec<Vec<f64>> {
        let n_lin = coeffs.iter().map(|c| c.lin_end()).max().unwrap_or(0);
        let n_sq = coeffs.iter().map(|c| c.sq_end()).max().unwrap_or(0);
        self.map_trials(trials, n_lin, n_sq, |_, lin, sq| {
            coeffs.iter().map(|c| c.eval_with(lin, sq)).collect()
        })
    }
}

pub const VARIANCE_SLACK: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderStats {
    /// Variance of the first sum.
    pub variance: f64,
    pub covariance: f64,
    /// `½ log log T_ℓ`
    pub predicted: f64,
    pub slack: f64,
}

impl SecondOrderStats {
    pub fn variance_within_slack(&self) -> bool {
        (self.variance - self.predicted).abs() <= self.slack
    }
}

/// Exact model variance and covariance:
/// `½ Σ a_A a_B p^{-σ_A-σ_B} + ⅛ Σ a_A(p²) a_B(p²) p^{-2σ_A-2σ_B}`.
///
/// The square terms are `½ a(p²) p^{-2σ} Re X(p)²` and `Re X(p)² =
/// cos 2θ` has variance ½, hence the ⅛.
pub fn analytic_second_order(
    a: &DirichletPolySpec,
    b: &DirichletPolySpec,
    table: &PrimeTable,
) -> Result<SecondOrderStats> {
    if (a.log_tell - b.log_tell).abs() > 1e-12 {
        return Err(crate::error::invalid("specs", "both sums must share the cutoff"));
    }
    let ca = DirichletCoeffs::new(a, table)?;
    let cb = DirichletCoeffs::new(b, table)?;
    Ok(SecondOrderStats {
        variance: coeff_covariance(&ca, &ca),
        covariance: coeff_covariance(&ca, &cb),
        predicted: 0.5 * a.log_tell.ln(),
        slack: VARIANCE_SLACK,
    })
}

/// Model covariance of two coefficient sets over the same primes.
pub fn coeff_covariance(a: &DirichletCoeffs, b: &DirichletCoeffs) -> f64 {
    let mut s = KahanSum::new();
    for (x, y) in a.amp.iter().zip(&b.amp) {
        s.add(0.5 * x * y);
    }
    for (x, y) in a.sq_amp.iter().zip(&b.sq_amp) {
        s.add(0.5 * x * y);
    }
    s.value()
}

/// Per-prime pairs `(A, B)` of `A Re X(p) + B Re X(p²)` in a coefficient set.
pub fn prime_components(c: &DirichletCoeffs) -> Vec<(f64, f64)> {
    let lo = c.lin_start.min(c.sq_start);
    let hi = c.lin_end().max(c.sq_end());
    (lo..hi)
        .filter_map(|i| {
            let a = if (c.lin_start..c.lin_end()).contains(&i) { c.amp[i - c.lin_start] } else { 0.0 };
            let b = if (c.sq_start..c.sq_end()).contains(&i) { c.sq_amp[i - c.sq_start] } else { 0.0 };
            (a != 0.0 || b != 0.0).then_some((a, b))
        })
        .collect()
}

/// `E[(A cos θ + B cos 2θ)^m]` for `m = 0..=order`, θ uniform. The
/// integrand is a trigonometric polynomial of degree `2m`, so the periodic
/// trapezoid rule with `2·order + 2` points is exact.
pub fn single_prime_moments(a: f64, b: f64, order: usize) -> Vec<f64> {
    let n = 2 * order + 2;
    let mut out = vec![0.0; order + 1];
    for k in 0..n {
        let th = TAU * k as f64 / n as f64;
        let w = a * th.cos() + b * (2.0 * th).cos();
        let mut p = 1.0;
        for slot in out.iter_mut() {
            *slot += p;
            p *= w;
        }
    }
    out.iter_mut().for_each(|m| *m /= n as f64);
    out
}

/// Raw moments `E[Y^m]`, `m ≤ order`, of the Steinhaus sum with the given
/// coefficients, by binomial convolution of the independent prime terms.
pub fn exact_moments(c: &DirichletCoeffs, order: usize) -> Vec<f64> {
    let binom = binomial_table(order);
    let mut acc = vec![0.0; order + 1];
    acc[0] = 1.0;
    for (a, b) in prime_components(c) {
        let w = single_prime_moments(a, b, order);
        let mut next = vec![0.0; order + 1];
        for n in 0..=order {
            let mut s = 0.0;
            for k in 0..=n {
                s += binom[n][k] * acc[k] * w[n - k];
            }
            next[n] = s;
        }
        acc = next;
    }
    acc
}

fn binomial_table(n: usize) -> Vec<Vec<f64>> {
    let mut t = vec![vec![0.0; n + 1]; n + 1];
    for i in 0..=n {
        t[i][0] = 1.0;
        for k in 1..=i {
            t[i][k] = t[i - 1][k - 1] + if k < i { t[i - 1][k] } else { 0.0 };
        }
    }
    t
}

/// `(2q-1)!! var^q`
pub fn gaussian_moment(variance: f64, q: u32) -> f64 {
    double_factorial_odd(q) * variance.powi(q as i32)
}

/// An increment `S_ℓ^{(j)} - S_k^{(j)}` of one abscissa between two cutoffs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncrementSpec {
    pub abscissa: DirichletPolySpec,
    pub log_t_lo: f64,
    /// `log T` of the whole problem, for the length condition.
    pub log_t_total: f64,
}

impl IncrementSpec {
    pub fn coeffs(&self, table: &PrimeTable) -> Result<DirichletCoeffs> {
        DirichletCoeffs::band(&self.abscissa, table, self.log_t_lo)
    }

    /// `log β_ℓ - log β_k = t_ℓ - t_k`
    pub fn scale_gap(&self) -> f64 {
        self.abscissa.log_tell.ln() - self.log_t_lo.ln()
    }

    /// `T_ℓ^{2q} ≤ T^{1/4}`
    pub fn check_length(&self, q: u32) -> Result<()> {
        let lhs = 2.0 * q as f64 * self.abscissa.log_tell;
        if lhs > self.log_t_total / 4.0 {
            return Err(LabError::LengthCondition(format!(
                "2q·log T_ℓ = {lhs} exceeds log T/4 = {}",
                self.log_t_total / 4.0
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentBoundReport {
    pub target_eq: String,
    pub q: u32,
    pub model: ModelKind,
    /// Exact Steinhaus `E[Y^{2q}]`.
    pub exact: f64,
    /// Closed-form Gaussian moment at the same variance.
    pub gaussian: f64,
    pub variance: f64,
    /// `(2q-1)!! (½(t_ℓ - t_k))^q`
    pub bound: f64,
    pub ratio: f64,
    pub empirical: Option<f64>,
    pub empirical_std_err: Option<f64>,
    pub trials: usize,
    pub seed: u64,
    pub ceiling: f64,
    pub pass: bool,
}

/// Exact and (when `trials > 0`) Monte-Carlo `2q`-th moments of an
/// increment against `(2q-1)!! (½(t_ℓ - t_k))^q`. Passes when the exact
/// ratio is at most `ceiling` and the Monte-Carlo value is within four
/// standard errors of its exact model value.
pub fn moment_bound_check(
    inc: &IncrementSpec,
    table: &PrimeTable,
    q: u32,
    model: ModelKind,
    trials: usize,
    seed: u64,
    ceiling: f64,
) -> Result<MomentBoundReport> {
    inc.check_length(q)?;
    if q > 60 {
        return Err(crate::error::invalid("q", "exact moments limited to q ≤ 60"));
    }
    let c = inc.coeffs(table)?;
    let order = 2 * q as usize;
    let exact = exact_moments(&c, order)[order];
    let variance = coeff_covariance(&c, &c);
    let gaussian = gaussian_moment(variance, q);
    let bound = double_factorial_odd(q) * (0.5 * inc.scale_gap()).powi(q as i32);
    let target_model = match model {
        ModelKind::Steinhaus => exact,
        ModelKind::Gaussian => gaussian,
    };
    let (mut empirical, mut se) = (None, None);
    let mut mc_ok = true;
    if trials > 0 {
        let sampler = ModelSampler::new(model, seed, "random_models");
        let vals = sampler.sample_sums(std::slice::from_ref(&c), trials);
        let p: Vec<f64> = vals.iter().map(|v| v[0].powi(order as i32)).collect();
        let (m, s) = mean_and_se(&p);
        mc_ok = (m - target_model).abs() <= 4.0 * s;
        empirical = Some(m);
        se = Some(s);
    }
    let ratio = exact / bound;
    Ok(MomentBoundReport {
        target_eq: "moment_bound".into(),
        q,
        model,
        exact,
        gaussian,
        variance,
        bound,
        ratio,
        empirical,
        empirical_std_err: se,
        trials,
        seed,
        ceiling,
        pass: ratio <= ceiling && mc_ok,
    })
}

/// Smallest `C ≥ 0` with `m_{2q} ≤ √q (2q-1)!! (t_1/2 + C)^q`.
pub fn sqrt_bound_constant(moment: f64, q: u32, t1: f64) -> f64 {
    let base = (moment / ((q as f64).sqrt() * double_factorial_odd(q))).powf(1.0 / q as f64);
    (base - 0.5 * t1).max(0.0)
}

pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().cloned().collect::<KahanSum>().value() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).collect::<KahanSum>().value() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// Sample variance and its standard error `√((m₄ - s⁴)/n)`.
pub fn variance_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().cloned().collect::<KahanSum>().value() / n;
    let m2 = xs.iter().map(|x| (x - m).powi(2)).collect::<KahanSum>().value() / n;
    let m4 = xs.iter().map(|x| (x - m).powi(4)).collect::<KahanSum>().value() / n;
    (m2 * n / (n - 1.0), ((m4 - m2 * m2) / n).sqrt())
}

/// Kolmogorov–Smirnov distance of a sample to the standard normal.
pub fn ks_statistic_normal(xs: &[f64]) -> f64 {
    let mut s = xs.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal_cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// `ln E[exp(λ(A cos θ + B cos 2θ))]`: a Bessel value when one of the
/// components vanishes, otherwise a periodic trapezoid sum (exponentially
/// convergent for this entire integrand).
pub fn ln_mgf_single(lambda: f64, a: f64, b: f64) -> f64 {
    if b == 0.0 {
        return ln_bessel_i0(lambda * a);
    }
    if a == 0.0 {
        return ln_bessel_i0(lambda * b);
    }
    let n = 64 + 8 * (lambda * (a.abs() + b.abs())).ceil() as usize;
    let peak = lambda.abs() * (a.abs() + b.abs());
    let s: f64 = (0..n)
        .map(|k| {
            let th = TAU * k as f64 / n as f64;
            (lambda * (a * th.cos() + b * (2.0 * th).cos()) - peak).exp()
        })
        .sum();
    peak + (s / n as f64).ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MgfReport {
    pub target_eq: String,
    pub k_idx: usize,
    pub ell_idx: usize,
    pub j_idx: usize,
    pub lambda: f64,
    pub ln_mgf: f64,
    /// Part of `ln_mgf` from primes beyond the table, from the prime number
    /// theorem density.
    pub ln_mgf_tail: f64,
    pub primes_exact: usize,
    /// `e^{λ²(t_ℓ - t_k)/4}`; absent for `k = 0` where it is infinite.
    pub bound: Option<f64>,
    pub ratio: Option<f64>,
}

/// MGF of the increment between `T_k` and `T_ℓ` at abscissa `j`.
///
/// Primes inside the table contribute exact per-prime factors. When
/// `T_ℓ` is beyond the table, the remaining primes (and squares) enter
/// through `∫ ln I₀(λ a(u) u^{-σ}) du / log u`, where the argument is tiny.
pub fn mgf_bound_check(
    grid: &crate::grid::CheckpointGrid,
    k_idx: usize,
    ell_idx: usize,
    j_idx: usize,
    lambda: f64,
    table: &PrimeTable,
) -> Result<MgfReport> {
    if !(k_idx < ell_idx && ell_idx <= grid.capital_l && ell_idx <= j_idx && j_idx <= grid.capital_l) {
        return Err(crate::error::invalid(
            "indices",
            format!("need 0 ≤ k < ℓ ≤ j ≤ 𝓛, got k={k_idx} ℓ={ell_idx} j={j_idx}"),
        ));
    }
    let spec = DirichletPolySpec::from_grid(grid, j_idx, ell_idx)?;
    let lo = grid.log_t_at(k_idx);
    let hi = spec.log_tell;
    let table_log = (table.limit as f64).ln();
    let inside = spec.with_cutoff(ell_idx, hi.min(table_log));
    let c = DirichletCoeffs::band(&inside, table, lo)?;
    let comps = prime_components(&c);
    let exact: f64 = comps
        .iter()
        .map(|&(a, b)| ln_mgf_single(lambda, a, b))
        .collect::<KahanSum>()
        .value();
    let mut tail = 0.0;
    if hi > table_log {
        // linear terms on (max(lo, table), hi], squares where log p ∈ (.., hi/2]
        tail += pnt_tail(&spec, lambda, lo.max(table_log), hi, 1.0);
        let sq_lo = (lo.max(table_log * 2.0)) / 2.0;
        if hi / 2.0 > sq_lo {
            tail += pnt_tail(&spec, lambda, sq_lo, hi / 2.0, 2.0);
        }
    }
    let ln_mgf = exact + tail;
    let (bound, ratio) = if k_idx == 0 {
        (None, None)
    } else {
        let ln_b = lambda * lambda * (grid.t(ell_idx) - grid.t(k_idx)) / 4.0;
        (Some(ln_b.exp()), Some((ln_mgf - ln_b).exp()))
    };
    Ok(MgfReport {
        target_eq: "mgf_steinhaus".into(),
        k_idx,
        ell_idx,
        j_idx,
        lambda,
        ln_mgf,
        ln_mgf_tail: tail,
        primes_exact: comps.len(),
        bound,
        ratio,
    })
}

/// `∫ ln I₀(λ w(v)) e^v dv / v` over `v = log p ∈ (v_lo, v_hi]`, with
/// `w = a(p^m) p^{-mσ}` (halved for squares).
fn pnt_tail(spec: &DirichletPolySpec, lambda: f64, v_lo: f64, v_hi: f64, m: f64) -> f64 {
    let rule = GaussRule::new(24);
    let pieces = ((v_hi / v_lo).ln() * 40.0).ceil().max(8.0) as usize;
    let ratio = (v_hi / v_lo).powf(1.0 / pieces as f64);
    let mut acc = KahanSum::new();
    let mut a = v_lo;
    for _ in 0..pieces {
        let b = a * ratio;
        acc.add(rule.integrate(a, b, |v| {
            let half = if m == 2.0 { 0.5 } else { 1.0 };
            let amp = half * spec.weight(m * v);
            // x² e^v with x = λ·amp·e^{-mσv}
            let x2ev = (lambda * amp).powi(2) * ((1.0 - 2.0 * m * spec.sigma) * v).exp();
            let x2 = (lambda * amp).powi(2) * (-2.0 * m * spec.sigma * v).exp();
            // ln I₀(x) = x²/4 - x⁴/64 + O(x⁶)
            x2ev * (0.25 - x2 / 64.0) / v
        }));
        a = b;
    }
    acc.value()
}

/// `E[e^{x cos θ}]` by direct quadrature, to validate the Bessel identity.
pub fn cosine_mgf_quadrature(x: f64) -> f64 {
    GaussRule::new(64).integrate(0.0, TAU, |t| (x * t.cos()).exp()) / TAU
}

pub fn bessel_identity_gap(x: f64) -> f64 {
    (bessel_i0(x) - cosine_mgf_quadrature(x)).abs()
}
