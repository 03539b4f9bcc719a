//! A polynomial `𝒟` whose square sandwiches the indicator of `[0, Δ⁻¹]`:
//!
//! `1[0, Δ⁻¹](x)(1 - ε) ≤ 𝒟(x)² ≤ 1[-Δ^{-a}, Δ⁻¹ + Δ^{-a}](x) + ε`,
//! `ε = e^{-Δ^{a-2}}`, for `|x| ≤ X`.
//!
//! Construction: `F = 1[A, B] * K` with the band-limited probability
//! density `K(z) = C sinc(βz)^{2m}` (spectrum inside `[-mβ, mβ]`) and the
//! window `[A, B] = [-w/2, Δ⁻¹ + w/2]`, `w = Δ^{-a}`. `𝒟` is the Taylor
//! polynomial of `F` at 0 of degree `D - 1`. Since `|F^{(ℓ)}| ≤ (2πmβ)^ℓ
//! 2mβ(B - A)`, both the coefficient ceiling and the truncation error
//! follow in closed form.
//!
//! The degree runs into the millions and the coefficients overflow `f64`,
//! so values are not produced by Horner's rule: `𝒟(x)` is enclosed in
//! `F(x) ± R̄(x)` with `R̄` the analytic Taylor remainder bound, and `F` is
//! evaluated through its tails, in log space, by lobe-wise Gauss–Legendre
//! quadrature between the zeros of the sinc.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, LabError, Result};
use crate::numeric::{gauss_legendre, ln_factorial, ln_gamma, log_add_exp, KahanSum};

/// Exact coefficients stored for `ℓ ≤ STORED_ORDER`.
pub const STORED_ORDER: usize = 8;
const LOBES: usize = 48;
const TARGET_SHARE: f64 = 0.1;
const MAX_ATTEMPTS: u32 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorPoly {
    pub delta: f64,
    pub a_exp: u32,
    pub range_x: f64,
    /// Polynomial degree `D - 1`.
    pub degree: u64,
    /// `c_0 ..= c_{STORED_ORDER}` (exact up to rounding).
    pub coeffs: Vec<f64>,
    /// Additive corrections `(ℓ, δc)` to the coefficients (negative
    /// controls); evaluated exactly on top of the enclosure.
    pub perturbations: Vec<(usize, f64)>,
    pub m: u32,
    pub beta: f64,
    /// `mβ`
    pub bandwidth: f64,
    pub window: (f64, f64),
    /// `ln ε = -Δ^{a-2}`
    pub ln_eps: f64,
    /// `ln` of the bound on `P(|Z| > w/2)`.
    pub ln_tail_bound: f64,
    /// `ln R̄(X)`
    pub ln_remainder: f64,
    ln_norm: f64,
    attempts: u32,
}

/// `∫_{-∞}^{∞} sinc(u)^{2m} du`
fn sinc_power_integral(m: u32) -> f64 {
    let lobes = 400;
    let mut s = KahanSum::new();
    for k in 0..lobes {
        s.add(lobe_integral(m, k as f64, (k + 1) as f64).exp());
    }
    let tail = (-(2.0 * m as f64) * std::f64::consts::PI.ln() + (1.0 - 2.0 * m as f64) * (lobes as f64).ln()
        - (2.0 * m as f64 - 1.0).ln())
    .exp();
    2.0 * (s.value() + tail)
}

#[inline]
fn ln_sinc_abs(u: f64) -> f64 {
    if u.abs() < 1e-8 {
        return -(std::f64::consts::PI * u).powi(2) / 6.0;
    }
    let x = std::f64::consts::PI * u;
    (x.sin().abs() / x.abs()).ln()
}

fn nodes_for(m: u32) -> usize {
    (2 * m as usize + 16).clamp(32, 200)
}

thread_local! {
    static RULES: std::cell::RefCell<Vec<(usize, Vec<f64>, Vec<f64>)>> = const { std::cell::RefCell::new(Vec::new()) };
}

fn with_rule<R>(n: usize, f: impl FnOnce(&[f64], &[f64]) -> R) -> R {
    RULES.with(|cell| {
        let mut rules = cell.borrow_mut();
        if !rules.iter().any(|r| r.0 == n) {
            let (x, w) = gauss_legendre(n);
            rules.push((n, x, w));
        }
        let r = rules.iter().find(|r| r.0 == n).unwrap();
        f(&r.1, &r.2)
    })
}

/// `ln ∫_{u1}^{u2} sinc(u)^{2m} du` for `u1 < u2` inside one lobe.
fn lobe_integral(m: u32, u1: f64, u2: f64) -> f64 {
    let n = nodes_for(m);
    let half = 0.5 * (u2 - u1);
    let mid = 0.5 * (u2 + u1);
    with_rule(n, |x, w| {
        let logs: Vec<f64> = x.iter().map(|&t| 2.0 * m as f64 * ln_sinc_abs(mid + half * t)).collect();
        let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let s: f64 = logs.iter().zip(w).map(|(l, wi)| wi * (l - top).exp()).sum();
        top + (s * half).ln()
    })
}

/// Upper estimate of `ln ∫_{u1}^{u2} sinc(u)^{2m} du`, `0 ≤ u1 < u2 ≤ ∞`:
/// quadrature over the first `LOBES` lobes and the bound
/// `sinc^{2m} ≤ (πu)^{-2m}` beyond.
fn ln_sinc_power_between(m: u32, u1: f64, u2: f64) -> f64 {
    debug_assert!(u1 >= 0.0 && u2 > u1);
    let mut acc = f64::NEG_INFINITY;
    let mut a = u1;
    let stop = (u1.floor() + LOBES as f64).min(u2);
    while a < stop {
        let b = (a.floor() + 1.0).min(stop);
        acc = log_add_exp(acc, lobe_integral(m, a, b));
        a = b;
    }
    if u2 > stop {
        let p = 2.0 * m as f64;
        let mut tail = -p * std::f64::consts::PI.ln() + (1.0 - p) * stop.ln() - (p - 1.0).ln();
        if u2.is_finite() {
            // ∫_U^V u^{-p} = (U^{1-p} - V^{1-p})/(p-1)
            tail += (-((1.0 - p) * (u2 / stop).ln()).exp()).ln_1p();
        }
        acc = log_add_exp(acc, tail);
    }
    acc
}

/// `F(x)` in one of two log forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FValue {
    /// `ln F`
    Direct(f64),
    /// `ln (1 - F)`
    Complement(f64),
}

impl FValue {
    pub fn value(&self) -> f64 {
        match *self {
            Self::Direct(l) => l.exp(),
            Self::Complement(l) => 1.0 - l.exp(),
        }
        .max(0.0)
        .min(1.0)
    }
}

/// Enclosure of `𝒟(x)²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolyValue {
    pub lo: f64,
    pub hi: f64,
    pub certified: bool,
}

impl PolyValue {
    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub grid_points: usize,
    pub lower_violations: usize,
    pub upper_violations: usize,
    /// Largest `lhs - rhs` over both inequalities (negative when valid).
    pub max_excess: f64,
}

impl SandwichReport {
    pub fn valid(&self) -> bool {
        self.lower_violations == 0 && self.upper_violations == 0
    }
}

pub fn build_indicator_poly(delta: f64, a_exp: u32, range_x: f64) -> Result<IndicatorPoly> {
    if !(delta >= 3.0) {
        return Err(invalid("delta", "need Δ ≥ 3"));
    }
    if a_exp < 3 {
        return Err(invalid("a_exp", "need a ≥ 3"));
    }
    if !(range_x > 0.0) {
        return Err(invalid("range_x", "must be positive"));
    }
    let growth = delta.powi(a_exp as i32 - 2);
    if growth < 10.0 {
        return Err(invalid("delta", format!("Δ^(a-2) = {growth} below 10")));
    }
    let mut share = TARGET_SHARE;
    for attempt in 1..=MAX_ATTEMPTS {
        let mut poly = construct(delta, a_exp, range_x, share)?;
        poly.attempts = attempt;
        if validate_sandwich(&poly, 1000).valid() {
            return Ok(poly);
        }
        share /= 10.0;
    }
    Err(LabError::ConstructionFailed(format!(
        "Δ={delta}, a={a_exp}, X={range_x}: sandwich violated after {MAX_ATTEMPTS} attempts"
    )))
}

fn construct(delta: f64, a_exp: u32, range_x: f64, share: f64) -> Result<IndicatorPoly> {
    let w = delta.powi(-(a_exp as i32));
    let ln_eps = -delta.powi(a_exp as i32 - 2);
    let ln_target = ln_eps + share.ln();
    let window = (-0.5 * w, 1.0 / delta + 0.5 * w);
    let len = window.1 - window.0;
    // Smallest bandwidth mβ whose tail bound (2/(πI)) r^{1-2m}/(2m-1),
    // r = πβw/2, meets the target.
    let mut best: Option<(f64, u32, f64, f64)> = None;
    // The optimum sits near m ≈ -ln(target)/2.
    let m_max = ((-ln_target).ceil() as u32 + 8).clamp(16, 600);
    for m in 4..=m_max {
        let p = 2.0 * m as f64;
        let i_m = sinc_power_integral(m);
        let c = (2.0 / (i_m * std::f64::consts::PI * (p - 1.0))).ln();
        let ln_r = (c - ln_target) / (p - 1.0);
        let beta = 2.0 * ln_r.exp() / (std::f64::consts::PI * w);
        let bw = m as f64 * beta;
        if best.is_none_or(|b| bw < b.0) {
            best = Some((bw, m, beta, i_m));
        }
    }
    let (bandwidth, m, beta, i_m) = best.unwrap();
    if bandwidth > delta.powi(2 * a_exp as i32) || 2.0 * bandwidth * len > delta.powi(4 * a_exp as i32) {
        return Err(LabError::ConstructionFailed(format!(
            "bandwidth {bandwidth} exceeds Δ^(2a)"
        )));
    }
    let r_tail = std::f64::consts::PI * beta * w / 2.0;
    let p = 2.0 * m as f64;
    let ln_tail_bound = (2.0 / (i_m * std::f64::consts::PI * (p - 1.0))).ln() + (1.0 - p) * r_tail.ln();
    let z = 2.0 * std::f64::consts::PI * bandwidth * range_x;
    let ln_amp = (2.0 * bandwidth * len).ln();
    let ln_rem = |d: u64| -> f64 {
        let df = d as f64;
        let q = z / (df + 1.0);
        df * z.ln() - ln_gamma(df + 1.0) + ln_amp - (1.0 - q).ln()
    };
    let mut lo = z.ceil() as u64 + 1;
    let mut hi = lo.max(8);
    while ln_rem(hi) > ln_target {
        hi *= 2;
    }
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if ln_rem(mid) <= ln_target {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let d = hi;
    let degree_cap = 100.0 * range_x * delta.powi(3 * a_exp as i32);
    if (d as f64) >= degree_cap {
        return Err(LabError::ConstructionFailed(format!(
            "degree {d} not below 100XΔ^(3a) = {degree_cap}"
        )));
    }
    let mut poly = IndicatorPoly {
        delta,
        a_exp,
        range_x,
        degree: d - 1,
        coeffs: Vec::new(),
        perturbations: Vec::new(),
        m,
        beta,
        bandwidth,
        window,
        ln_eps,
        ln_tail_bound,
        ln_remainder: ln_rem(d),
        ln_norm: i_m.ln(),
        attempts: 0,
    };
    poly.coeffs = low_order_coeffs(&poly);
    Ok(poly)
}

/// Taylor coefficients of `sinc(β(z0 + h))` in `h` up to `order`.
fn sinc_series(beta: f64, z0: f64, order: usize) -> Vec<f64> {
    let pb = std::f64::consts::PI * beta;
    let phi = pb * z0;
    let (s, c) = phi.sin_cos();
    // sin(φ + πβh) = Σ [s·(-1)^{k/2} or c·(-1)^{(k-1)/2}] (πβh)^k / k!
    let mut num = vec![0.0; order + 1];
    let mut f = 1.0;
    for (k, slot) in num.iter_mut().enumerate() {
        if k > 0 {
            f *= pb / k as f64;
        }
        *slot = f * match k % 4 {
            0 => s,
            1 => c,
            2 => -s,
            _ => -c,
        };
    }
    // 1/(πβ(z0 + h)) = 1/(πβ z0) Σ (-h/z0)^n
    let mut inv = vec![0.0; order + 1];
    for (n, slot) in inv.iter_mut().enumerate() {
        *slot = (-1.0f64).powi(n as i32) / (pb * z0.powi(n as i32 + 1));
    }
    series_mul(&num, &inv)
}

fn series_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().min(b.len());
    (0..n).map(|k| (0..=k).map(|i| a[i] * b[k - i]).sum()).collect()
}

fn series_pow(a: &[f64], mut e: u32) -> Vec<f64> {
    let mut out = vec![0.0; a.len()];
    out[0] = 1.0;
    let mut base = a.to_vec();
    while e > 0 {
        if e & 1 == 1 {
            out = series_mul(&out, &base);
        }
        base = series_mul(&base, &base);
        e >>= 1;
    }
    out
}

/// `c_ℓ` for `ℓ ≤ STORED_ORDER`: `c_0 = F(0)`, and for `ℓ ≥ 1`
/// `F^{(ℓ)}(0) = K^{(ℓ-1)}(-A) - K^{(ℓ-1)}(-B)`.
fn low_order_coeffs(p: &IndicatorPoly) -> Vec<f64> {
    let order = STORED_ORDER.min(p.degree as usize);
    let c = p.beta / p.ln_norm.exp();
    let kser = |z0: f64| -> Vec<f64> {
        series_pow(&sinc_series(p.beta, z0, order), 2 * p.m)
            .into_iter()
            .map(|x| c * x)
            .collect()
    };
    let at_a = kser(-p.window.0);
    let at_b = kser(-p.window.1);
    let mut out = vec![f_value(p, 0.0).value()];
    for l in 1..=order {
        // K^{(j)}(z0) = j! k_j, and c_ℓ = F^{(ℓ)}(0)/ℓ!
        out.push((at_a[l - 1] - at_b[l - 1]) / l as f64);
    }
    out
}

/// `ln P(Z > s)` for `s ≥ 0`, `Z ~ K`.
fn ln_tail(p: &IndicatorPoly, s: f64) -> f64 {
    ln_mass_between(p, s, f64::INFINITY)
}

/// `ln P(s1 < Z < s2)` for `0 ≤ s1 < s2`.
fn ln_mass_between(p: &IndicatorPoly, s1: f64, s2: f64) -> f64 {
    ln_sinc_power_between(p.m, p.beta * s1, p.beta * s2) - p.ln_norm
}

/// `F(x) = P(x - B < Z < x - A)`, computed as a positive integral or,
/// inside the window, through its deficit.
pub fn f_value(p: &IndicatorPoly, x: f64) -> FValue {
    let (a, b) = p.window;
    let (lo, hi) = (x - b, x - a);
    if hi <= 0.0 {
        FValue::Direct(ln_mass_between(p, -hi, -lo))
    } else if lo >= 0.0 {
        FValue::Direct(ln_mass_between(p, lo, hi))
    } else {
        FValue::Complement(log_add_exp(ln_tail(p, -lo), ln_tail(p, hi)))
    }
}

impl IndicatorPoly {
    /// `ln R̄(|x|)`: `Σ_{ℓ ≥ D} (2πB|x|)^ℓ/ℓ! · 2B(b - a)`.
    pub fn ln_remainder_at(&self, x: f64) -> f64 {
        if x == 0.0 {
            return f64::NEG_INFINITY;
        }
        let d = (self.degree + 1) as f64;
        let z = 2.0 * std::f64::consts::PI * self.bandwidth * x.abs();
        let q = z / (d + 1.0);
        if q >= 1.0 {
            return f64::INFINITY;
        }
        d * z.ln() - ln_gamma(d + 1.0) + (2.0 * self.bandwidth * (self.window.1 - self.window.0)).ln()
            - (1.0 - q).ln()
    }

    pub fn eps(&self) -> f64 {
        self.ln_eps.exp()
    }

    fn perturbation_at(&self, x: f64) -> f64 {
        self.perturbations.iter().map(|&(l, d)| d * x.powi(l as i32)).sum()
    }

    /// Multiply stored coefficient `ℓ` by `factor` (for negative controls).
    pub fn corrupt_coefficient(&mut self, l: usize, factor: f64) -> Result<()> {
        let c = *self
            .coeffs
            .get(l)
            .ok_or_else(|| invalid("l", format!("only ℓ ≤ {} stored", self.coeffs.len() - 1)))?;
        self.perturbations.push((l, (factor - 1.0) * c));
        self.coeffs[l] = factor * c;
        Ok(())
    }

    /// Index of the stored coefficient of largest magnitude.
    pub fn largest_stored(&self) -> usize {
        (0..self.coeffs.len())
            .max_by(|&i, &j| self.coeffs[i].abs().partial_cmp(&self.coeffs[j].abs()).unwrap())
            .unwrap_or(0)
    }

    /// `ln` of the analytic coefficient bound `(2πB)^ℓ 2B(b-a)/ℓ!`.
    pub fn ln_coeff_bound(&self, l: u64) -> f64 {
        let lf = l as f64;
        lf * (2.0 * std::f64::consts::PI * self.bandwidth).ln() + (2.0 * self.bandwidth * (self.window.1 - self.window.0)).ln()
            - ln_factorial(l)
    }

    /// `ln` of the ceiling `(2π)^ℓ/ℓ! Δ^{2a(ℓ+2)}`.
    pub fn ln_coeff_ceiling(&self, l: u64) -> f64 {
        let lf = l as f64;
        lf * (2.0 * std::f64::consts::PI).ln() - ln_factorial(l) + 2.0 * self.a_exp as f64 * (lf + 2.0) * self.delta.ln()
    }

    /// Degree and coefficient ceilings. The bound minus the ceiling is
    /// linear in `ℓ`, so checking both ends covers every coefficient.
    pub fn audit(&self) -> CoefficientAudit {
        let ends = [0, self.degree];
        let analytic_ok = ends.iter().all(|&l| self.ln_coeff_bound(l) <= self.ln_coeff_ceiling(l) + 1e-12);
        let stored_ok = self
            .coeffs
            .iter()
            .enumerate()
            .all(|(l, c)| c.abs() == 0.0 || c.abs().ln() <= self.ln_coeff_ceiling(l as u64) + 1e-12);
        let degree_cap = 100.0 * self.range_x * self.delta.powi(3 * self.a_exp as i32);
        CoefficientAudit {
            degree: self.degree,
            degree_cap,
            degree_ok: (self.degree as f64) < degree_cap,
            analytic_ok,
            stored_ok,
        }
    }

    pub fn to_document(&self) -> IndicatorDocument {
        IndicatorDocument {
            delta: self.delta,
            a: self.a_exp,
            x_range: self.range_x,
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|c| format!("{c:.17e}")).collect(),
            m: self.m,
            beta: self.beta,
            bandwidth: self.bandwidth,
            window: [self.window.0, self.window.1],
            ln_eps: self.ln_eps,
            ln_tail_bound: self.ln_tail_bound,
            ln_remainder: self.ln_remainder,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientAudit {
    pub degree: u64,
    pub degree_cap: f64,
    pub degree_ok: bool,
    pub analytic_ok: bool,
    pub stored_ok: bool,
}

impl CoefficientAudit {
    pub fn ok(&self) -> bool {
        self.degree_ok && self.analytic_ok && self.stored_ok
    }
}

/// Serialized form. Only the low-order coefficients are listed; the rest
/// are determined by the construction parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorDocument {
    pub delta: f64,
    pub a: u32,
    pub x_range: f64,
    pub degree: u64,
    pub coeffs: Vec<String>,
    pub m: u32,
    pub beta: f64,
    pub bandwidth: f64,
    pub window: [f64; 2],
    pub ln_eps: f64,
    pub ln_tail_bound: f64,
    pub ln_remainder: f64,
}

/// Enclosure of `𝒟(x)²`; `certified` is false for `|x| > X`.
pub fn eval_enclosure(p: &IndicatorPoly, x: f64) -> PolyValue {
    let f = f_value(p, x).value() + p.perturbation_at(x);
    let r = p.ln_remainder_at(x).exp();
    let (lo, hi) = (f - r, f + r);
    let sq_lo = if lo <= 0.0 && hi >= 0.0 { 0.0 } else { lo.abs().min(hi.abs()).powi(2) };
    PolyValue {
        lo: sq_lo,
        hi: lo.abs().max(hi.abs()).powi(2),
        certified: x.abs() <= p.range_x,
    }
}

/// `𝒟(x)²`; errors outside `[-X, X]` (use `eval_enclosure` to evaluate
/// there anyway).
pub fn eval_poly(p: &IndicatorPoly, x: f64) -> Result<f64> {
    let v = eval_enclosure(p, x);
    if !v.certified {
        return Err(LabError::OutsideCertifiedRange { x, range: p.range_x });
    }
    Ok(v.mid())
}

/// `(lower excess, upper excess)` at `x`; positive means violated.
///
/// Unperturbed polynomials are checked in log space so that `ε` far below
/// `f64` resolution (or underflow) is handled exactly.
fn excess_at(p: &IndicatorPoly, x: f64) -> (f64, f64) {
    let d_inv = 1.0 / p.delta;
    let w = p.delta.powi(-(p.a_exp as i32));
    let inside = (0.0..=d_inv).contains(&x);
    let widened = (-w..=d_inv + w).contains(&x);
    let ln_r = p.ln_remainder_at(x);
    let eps = p.eps();
    if !p.perturbations.is_empty() {
        let v = eval_enclosure(p, x);
        let lower = if inside { (1.0 - eps) - v.lo } else { -v.lo };
        let upper = v.hi - (if widened { 1.0 } else { 0.0 } + eps);
        return (lower, upper);
    }
    let fv = f_value(p, x);
    // Booleans from logs; the returned magnitudes are informative only.
    let lower = if inside {
        match fv {
            FValue::Complement(ln_d) => {
                // (1 - u)² ≥ 1 - ε  ⇔  u(2 - u) ≤ ε, u = δ + R̄
                let ln_u = log_add_exp(ln_d, ln_r);
                let u = ln_u.exp();
                let lhs = ln_u + (2.0 - u).ln();
                signed_gap(lhs, p.ln_eps)
            }
            FValue::Direct(_) => 1.0,
        }
    } else {
        -eval_enclosure(p, x).lo
    };
    let upper = if widened {
        // (F + R̄)² ≤ 1 + ε
        match fv {
            FValue::Complement(ln_d) => {
                if ln_r <= ln_d {
                    -ln_d.exp()
                } else {
                    let v = (ln_r.exp() - ln_d.exp()).max(f64::MIN_POSITIVE);
                    signed_gap(v.ln() + (2.0 + v).ln(), p.ln_eps)
                }
            }
            FValue::Direct(ln_f) => {
                let s = log_add_exp(ln_f, ln_r).exp();
                s * s - 1.0 - eps
            }
        }
    } else {
        // (F + R̄)² ≤ ε
        let ln_f = match fv {
            FValue::Direct(l) => l,
            FValue::Complement(_) => 0.0,
        };
        signed_gap(2.0 * log_add_exp(ln_f, ln_r), p.ln_eps)
    };
    (lower, upper)
}

/// `e^{lhs} - e^{rhs}` with the sign decided in log space.
fn signed_gap(ln_lhs: f64, ln_rhs: f64) -> f64 {
    let g = ln_lhs.exp() - ln_rhs.exp();
    if ln_lhs > ln_rhs {
        g.max(f64::MIN_POSITIVE)
    } else {
        g.min(-0.0)
    }
}

/// Check both inequalities at `n_grid` uniform points of `[-X, X]` and at
/// `0, Δ⁻¹, ±Δ^{-a}, Δ⁻¹ ± Δ^{-a}`.
pub fn validate_sandwich(p: &IndicatorPoly, n_grid: usize) -> SandwichReport {
    let d_inv = 1.0 / p.delta;
    let w = p.delta.powi(-(p.a_exp as i32));
    let mut xs: Vec<f64> = (0..n_grid)
        .map(|i| -p.range_x + 2.0 * p.range_x * i as f64 / (n_grid - 1).max(1) as f64)
        .collect();
    xs.extend([0.0, d_inv, -w, w, d_inv - w, d_inv + w]);
    let res: Vec<(f64, f64)> = xs.par_iter().map(|&x| excess_at(p, x)).collect();
    let mut rep = SandwichReport {
        grid_points: xs.len(),
        lower_violations: 0,
        upper_violations: 0,
        max_excess: f64::NEG_INFINITY,
    };
    for (lo, up) in res {
        rep.lower_violations += (lo > 0.0) as usize;
        rep.upper_violations += (up > 0.0) as usize;
        rep.max_excess = rep.max_excess.max(lo).max(up);
    }
    rep
}

/// Outcome of trying one Δ in [`smallest_valid_delta`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaTrial {
    pub delta: f64,
    pub valid: bool,
    /// Why the construction was rejected, if it was.
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaScan {
    pub a_exp: u32,
    pub range_x: f64,
    pub trials: Vec<DeltaTrial>,
    pub smallest: Option<f64>,
}

/// Scan integer `Δ = 3, 4, …, max_delta` at fixed `(a, X)` and stop at the
/// first Δ whose construction builds, passes the coefficient audit and has
/// a clean sandwich on `n_grid` points.
pub fn smallest_valid_delta(a_exp: u32, range_x: f64, max_delta: u32, n_grid: usize) -> DeltaScan {
    let mut scan = DeltaScan {
        a_exp,
        range_x,
        trials: Vec::new(),
        smallest: None,
    };
    for d in 3..=max_delta {
        let delta = d as f64;
        let reason = match build_indicator_poly(delta, a_exp, range_x) {
            Err(e) => Some(e.to_string()),
            Ok(p) if !p.audit().ok() => Some("coefficient audit failed".into()),
            Ok(p) => {
                let r = validate_sandwich(&p, n_grid);
                (!r.valid()).then(|| {
                    format!("{} lower and {} upper violations", r.lower_violations, r.upper_violations)
                })
            }
        };
        let valid = reason.is_none();
        scan.trials.push(DeltaTrial { delta, valid, reason });
        if valid {
            scan.smallest = Some(delta);
            break;
        }
    }
    scan
}

/// The coefficient-series bound behind the fourth-moment estimate:
/// `Σ_ℓ (2π)^ℓ/ℓ! · 2Δ^{2a(ℓ+2)} y^ℓ ≤ exp(9πΔ^{2a}(y + 4Δ))`, with the
/// left side summed term by term in log space. Returns `(ln lhs, ln rhs)`.
pub fn moment_budget(delta: f64, a_exp: u32, y: f64) -> (f64, f64) {
    let d2a = delta.powi(2 * a_exp as i32);
    let ln_rhs = 9.0 * std::f64::consts::PI * d2a * (y + 4.0 * delta);
    let base = 2f64.ln() + 4.0 * a_exp as f64 * delta.ln();
    if y == 0.0 {
        return (base, ln_rhs);
    }
    let z = 2.0 * std::f64::consts::PI * d2a * y;
    // Terms are Poisson-shaped around ℓ ≈ z; outside ±40√z (+ 60) they
    // are below e^{-700} of the peak.
    let spread = 40.0 * z.sqrt() + 60.0;
    let first = (z - spread).max(0.0) as u64;
    let last = (z + spread) as u64;
    let mut acc = f64::NEG_INFINITY;
    for l in first..=last {
        acc = log_add_exp(acc, base + l as f64 * z.ln() - ln_factorial(l));
    }
    (acc, ln_rhs)
}

/// A polynomial held in monomial form, for small explicit cases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonomialPoly {
    pub coeffs: Vec<f64>,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let z = s - a;
    (s, (a - (s - z)) + (b - z))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl MonomialPoly {
    /// Compensated Horner (error-free transformations of each step).
    pub fn eval_horner(&self, x: f64) -> f64 {
        let Some((&last, rest)) = self.coeffs.split_last() else {
            return 0.0;
        };
        let mut s = last;
        let mut c = 0.0;
        for &a in rest.iter().rev() {
            let (p, pe) = two_prod(s, x);
            let (t, se) = two_sum(p, a);
            s = t;
            c = c * x + (pe + se);
        }
        s + c
    }

    /// `Σ c_ℓ x^ℓ` with explicit powers and compensated summation.
    pub fn eval_direct(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(l, c)| c * x.powi(l as i32))
            .collect::<KahanSum>()
            .value()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinc_integrals() {
        // ∫ sinc^4 = 2/3, ∫ sinc^6 = 11/20
        assert!((sinc_power_integral(2) - 2.0 / 3.0).abs() < 1e-9);
        assert!((sinc_power_integral(3) - 0.55).abs() < 1e-12);
    }

    #[test]
    fn tail_estimate_is_conservative_and_tight() {
        let m = 10;
        let direct = ln_sinc_power_between(m, 2.3, f64::INFINITY);
        let mut fine = f64::NEG_INFINITY;
        let mut a: f64 = 2.3;
        while a < 2000.0 {
            let b = (a.floor() + 1.0).min(2000.0);
            fine = log_add_exp(fine, lobe_integral(m, a, b));
            a = b;
        }
        assert!(direct >= fine);
        assert!(direct - fine < 1e-10);
    }

    #[test]
    fn series_against_direct_derivative() {
        let s = sinc_series(3.0, 0.37, 4);
        let f = |z: f64| {
            let x = std::f64::consts::PI * 3.0 * z;
            x.sin() / x
        };
        assert!((s[0] - f(0.37)).abs() < 1e-15);
        let h = 1e-5;
        assert!((s[1] - (f(0.37 + h) - f(0.37 - h)) / (2.0 * h)).abs() < 1e-8);
        let p = series_pow(&s, 3);
        assert!((p[0] - f(0.37).powi(3)).abs() < 1e-15);
    }

    #[test]
    fn monomial_evaluators_agree() {
        let one = MonomialPoly { coeffs: vec![1.0] };
        assert_eq!(one.eval_horner(7.5), 1.0);
        let p = MonomialPoly {
            coeffs: (0..30).map(|i| ((i * 37 % 11) as f64 - 5.0) / (1.0 + i as f64)).collect(),
        };
        for x in [-1.3, -0.4, 0.2, 0.9, 1.1] {
            let a = p.eval_horner(x);
            let b = p.eval_direct(x);
            assert!((a - b).abs() <= 1e-10 * a.abs().max(1e-300), "{x}: {a} vs {b}");
        }
    }

    #[test]
    fn budget_inequality() {
        for y in [0.0, 0.1, 1.0, 5.0] {
            let (l, r) = moment_budget(3.0, 2, y);
            assert!(l <= r);
            // closed form 2Δ^{4a} e^{2πΔ^{2a} y}
            let closed = 2f64.ln() + 8.0 * 3f64.ln() + 2.0 * std::f64::consts::PI * 81.0 * y;
            assert!((l - closed).abs() < 1e-9 * closed.abs().max(1.0));
        }
    }

    #[test]
    fn low_order_coefficients_match_finite_differences() {
        let p = build_indicator_poly(3.0, 5, 30.0).unwrap();
        let c = p.beta / p.ln_norm.exp();
        let k = |z: f64| {
            let x = std::f64::consts::PI * p.beta * z;
            c * (x.sin() / x).powi(2 * p.m as i32)
        };
        let (za, zb) = (-p.window.0, p.window.1);
        assert!((p.coeffs[1] - (k(za) - k(zb))).abs() <= 1e-10 * k(za).abs().max(1e-300));
        let h = 1e-4 / p.beta;
        let rich = |f: &dyn Fn(f64, f64) -> f64, z: f64| (4.0 * f(z, h / 2.0) - f(z, h)) / 3.0;
        let d1 = |z: f64| rich(&|z, h| (k(z + h) - k(z - h)) / (2.0 * h), z);
        // K' is odd: K'(-B) = -K'(B)
        let c2 = (d1(za) + d1(zb)) / 2.0;
        assert!((p.coeffs[2] - c2).abs() <= 1e-6 * c2.abs(), "{} vs {c2}", p.coeffs[2]);
        let d2 = |z: f64| rich(&|z, h| (k(z + h) - 2.0 * k(z) + k(z - h)) / (h * h), z);
        let c3 = (d2(za) - d2(zb)) / 6.0;
        assert!((p.coeffs[3] - c3).abs() <= 1e-4 * c3.abs(), "{} vs {c3}", p.coeffs[3]);
        // c_0 = F(0) = 1 - P(Z > w/2) - P(Z > B)
        assert!((p.coeffs[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_small_delta() {
        assert!(build_indicator_poly(2.0, 5, 20.0).is_err());
        assert!(build_indicator_poly(3.0, 2, 30.0).is_err());
    }
}
