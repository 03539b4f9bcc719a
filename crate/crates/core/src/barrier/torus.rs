//! Exact probabilities and expectations over the phase torus of a few
//! primes.
//!
//! For box probabilities of linear statistics `Σ w_i cos θ_i` the innermost
//! angle is integrated in closed form (an arc of the circle) and the next one
//! by Gauss–Legendre split at the kinks of the inner arc length. The
//! remaining angles see square-root kinks at places with no closed form,
//! so they are integrated by nested adaptive Gauss–Kronrod.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, LabError, Result};
use crate::numeric::gauss_legendre;

pub const MAX_DIMENSION: usize = 5;
const TOLERANCE: f64 = 1e-8;

/// `lo ≤ Σ_i weights[i] cos θ_i ≤ hi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearBox {
    pub weights: Vec<f64>,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleValue {
    pub value: f64,
    /// Estimated absolute error.
    pub error: f64,
}

fn check_primes(primes: &[u64]) -> Result<()> {
    if primes.len() > MAX_DIMENSION {
        return Err(LabError::DimensionTooHigh(primes.len()));
    }
    if primes.is_empty() {
        return Err(invalid("primes", "empty prime set"));
    }
    let mut sorted = primes.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != primes.len() {
        return Err(invalid("primes", "repeated prime"));
    }
    if let Some(&p) = primes.iter().find(|&&p| p < 2 || (2..p).take_while(|d| d * d <= p).any(|d| p % d == 0)) {
        return Err(invalid("primes", format!("{p} is not prime")));
    }
    Ok(())
}

/// `P(all boxes hold)` with independent uniform phases, one per prime.
pub fn torus_oracle(primes: &[u64], boxes: &[LinearBox]) -> Result<OracleValue> {
    check_primes(primes)?;
    let d = primes.len();
    if boxes.is_empty() || boxes.len() > 2 {
        return Err(invalid("boxes", "one or two linear statistics"));
    }
    if boxes.iter().any(|b| b.weights.len() != d || !(b.lo <= b.hi)) {
        return Err(invalid("boxes", "weights must match the primes and lo ≤ hi"));
    }
    // The closed-form angle needs nonzero weights in every box.
    let inner = (0..d)
        .filter(|&i| boxes.iter().all(|b| b.weights[i] != 0.0))
        .max_by(|&i, &k| {
            let m = |i: usize| boxes.iter().map(|b| b.weights[i].abs()).fold(f64::INFINITY, f64::min);
            m(i).partial_cmp(&m(k)).unwrap()
        })
        .ok_or_else(|| invalid("boxes", "no prime carries weight in every statistic"))?;
    let mut order: Vec<usize> = (0..d).filter(|&i| i != inner).collect();
    order.push(inner);
    let w: Vec<Vec<f64>> = boxes.iter().map(|b| order.iter().map(|&i| b.weights[i]).collect()).collect();
    let bounds: Vec<(f64, f64)> = boxes.iter().map(|b| (b.lo, b.hi)).collect();
    let (value, error) = integrate(&w, &bounds, TOLERANCE);
    Ok(OracleValue { value, error })
}

/// Fraction of `θ ∈ [0, π]` with every `lo_b ≤ s_b + w_b cos θ ≤ hi_b`.
fn inner_fraction(w: &[Vec<f64>], bounds: &[(f64, f64)], s: [f64; 2], last: usize) -> f64 {
    let (mut clo, mut chi) = (-1.0f64, 1.0f64);
    for (b, &(lo, hi)) in bounds.iter().enumerate() {
        let wb = w[b][last];
        let (a, c) = ((lo - s[b]) / wb, (hi - s[b]) / wb);
        let (a, c) = if wb > 0.0 { (a, c) } else { (c, a) };
        clo = clo.max(a);
        chi = chi.min(c);
    }
    if clo >= chi {
        0.0
    } else {
        (clo.acos() - chi.acos()) / std::f64::consts::PI
    }
}

/// Gauss–Kronrod 7/15 nodes and weights on `[-1, 1]` (non-negative half).
const GK_X: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_K: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
/// Gauss weights for the odd-indexed Kronrod nodes (and the centre).
const GK_G: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];
const MAX_DEPTH: u32 = 18;
const SPLIT_NODES: usize = 64;
const SPLIT_CHECK: usize = 48;

/// `∫_a^b f` with `f` returning (value, error density). Returns the
/// integral and an error bound from Kronrod–Gauss differences plus the
/// integrated error density.
fn adaptive(f: &dyn Fn(f64) -> (f64, f64), a: f64, b: f64, tol: f64, depth: u32) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let (mut k, mut g, mut e) = (0.0, 0.0, 0.0);
    for i in 0..8 {
        let pts: &[f64] = if i == 7 { &[0.0] } else { &[-1.0, 1.0] };
        for &sgn in pts {
            let (v, ed) = f(mid + sgn * half * GK_X[i]);
            k += GK_K[i] * v;
            e += GK_K[i] * ed;
            if i % 2 == 1 {
                g += GK_G[i / 2] * v;
            }
        }
    }
    let (k, g, e) = (k * half, g * half, e * half);
    let est = (k - g).abs();
    if est <= tol || depth >= MAX_DEPTH {
        return (k, est + e);
    }
    let (l, el) = adaptive(f, a, mid, 0.5 * tol, depth + 1);
    let (r, er) = adaptive(f, mid, b, 0.5 * tol, depth + 1);
    (l + r, el + er)
}

/// Average over the angles of dimensions `dim..` given partial sums `s`.
fn level(w: &[Vec<f64>], bounds: &[(f64, f64)], rules: &Rules, dim: usize, s: [f64; 2], tol: f64) -> (f64, f64) {
    let d = w[0].len();
    if dim == d - 1 {
        return (inner_fraction(w, bounds, s, dim), 0.0);
    }
    if dim == d - 2 {
        return split_dimension(w, bounds, s, dim, rules);
    }
    let pi = std::f64::consts::PI;
    let f = |theta: f64| {
        let c = theta.cos();
        let mut t = s;
        for (b, tb) in t.iter_mut().enumerate().take(bounds.len()) {
            *tb += w[b][dim] * c;
        }
        level(w, bounds, rules, dim + 1, t, 0.1 * tol)
    };
    let (v, e) = adaptive(&f, 0.0, pi, tol * pi, 0);
    (v / pi, e / pi)
}

struct Rules {
    fine: (Vec<f64>, Vec<f64>),
    check: (Vec<f64>, Vec<f64>),
}

fn integrate(w: &[Vec<f64>], bounds: &[(f64, f64)], tol: f64) -> (f64, f64) {
    let rules = Rules {
        fine: gauss_legendre(SPLIT_NODES),
        check: gauss_legendre(SPLIT_CHECK),
    };
    level(w, bounds, &rules, 0, [0.0; 2], tol)
}

/// Average over `θ ∈ [0, π]` of dimension `dim`, split where the inner arc
/// length has kinks. On each piece `θ = mid + half·sin(πt/2)` turns the
/// square-root behaviour at the cuts into an analytic one. Returns the
/// value and its difference from a coarser rule.
fn split_dimension(w: &[Vec<f64>], bounds: &[(f64, f64)], s0: [f64; 2], dim: usize, rules: &Rules) -> (f64, f64) {
    let last = dim + 1;
    let mut cs: Vec<f64> = Vec::new();
    let mut push = |c: f64| {
        if c.is_finite() && c > -1.0 && c < 1.0 {
            cs.push(c);
        }
    };
    for (b, &(lo, hi)) in bounds.iter().enumerate() {
        let v = w[b][dim];
        if v == 0.0 {
            continue;
        }
        for e in [lo, hi] {
            for sign in [-1.0, 1.0] {
                push((e - s0[b] - sign * w[b][last]) / v);
            }
        }
    }
    if bounds.len() == 2 {
        let (v1, w1, v2, w2) = (w[0][dim], w[0][last], w[1][dim], w[1][last]);
        let slope = v2 / w2 - v1 / w1;
        if slope != 0.0 {
            for e1 in [bounds[0].0, bounds[0].1] {
                for e2 in [bounds[1].0, bounds[1].1] {
                    push(((e2 - s0[1]) / w2 - (e1 - s0[0]) / w1) / slope);
                }
            }
        }
    }
    let pi = std::f64::consts::PI;
    let mut cuts: Vec<f64> = cs.into_iter().map(f64::acos).collect();
    cuts.push(0.0);
    cuts.push(pi);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let apply = |rule: &(Vec<f64>, Vec<f64>)| {
        let mut acc = 0.0;
        for seg in cuts.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (t, v) in rule.0.iter().zip(&rule.1) {
                let arg = 0.5 * pi * t;
                let c = (mid + half * arg.sin()).cos();
                let jac = 0.5 * pi * arg.cos();
                let mut s = s0;
                for (bi, sb) in s.iter_mut().enumerate().take(bounds.len()) {
                    *sb += w[bi][dim] * c;
                }
                acc += v * jac * half * inner_fraction(w, bounds, s, last);
            }
        }
        acc / pi
    };
    let fine = apply(&rules.fine);
    (fine, (fine - apply(&rules.check)).abs())
}

/// `E f(θ_1, …, θ_d)` over independent uniform angles on `[0, 2π)` by the
/// `n`-point periodic trapezoid rule per dimension, which is exact for
/// trigonometric polynomials of degree below `n`.
pub fn torus_expectation<F>(dim: usize, n: usize, f: F) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    if dim == 0 || dim > MAX_DIMENSION {
        return Err(LabError::DimensionTooHigh(dim));
    }
    if n == 0 || (n as f64).powi(dim as i32) > 1e8 {
        return Err(invalid("n", "node count out of range"));
    }
    let step = std::f64::consts::TAU / n as f64;
    let mut idx = vec![0usize; dim];
    let mut theta = vec![0.0; dim];
    let mut sum = crate::numeric::KahanSum::new();
    loop {
        for (t, &i) in theta.iter_mut().zip(&idx) {
            *t = step * i as f64;
        }
        sum.add(f(&theta));
        let mut k = 0;
        while k < dim {
            idx[k] += 1;
            if idx[k] < n {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == dim {
            break;
        }
    }
    Ok(sum.value() / (n as f64).powi(dim as i32))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(w: Vec<f64>, lo: f64, hi: f64) -> Vec<LinearBox> {
        vec![LinearBox { weights: w, lo, hi }]
    }

    #[test]
    fn single_prime_cases() {
        let c = 0.7;
        assert!((torus_oracle(&[2], &one(vec![c], -c, c)).unwrap().value - 1.0).abs() < 1e-15);
        assert!((torus_oracle(&[2], &one(vec![c], 0.0, c)).unwrap().value - 0.5).abs() < 1e-15);
    }

    #[test]
    fn two_primes_against_one_dimensional_quadrature() {
        // P(a cos x + b cos y ∈ [lo, hi]) = (1/π)∫ F(x) dx with the arc
        // fraction F, integrated here on a very fine midpoint grid.
        let (a, b, lo, hi) = (1.0 / 2f64.sqrt(), 1.0 / 3f64.sqrt(), 0.5, 1.0);
        let n = 2_000_000;
        let pi = std::f64::consts::PI;
        let mut acc = 0.0;
        for i in 0..n {
            let x = (i as f64 + 0.5) * pi / n as f64;
            let s = a * x.cos();
            let clo = ((lo - s) / b).max(-1.0);
            let chi = ((hi - s) / b).min(1.0);
            if clo < chi {
                acc += (clo.acos() - chi.acos()) / pi;
            }
        }
        let reference = acc / n as f64;
        let got = torus_oracle(&[2, 3], &one(vec![a, b], lo, hi)).unwrap();
        assert!((got.value - reference).abs() < 1e-8, "{} vs {reference}", got.value);
        assert!(got.error < 1e-6);
    }

    #[test]
    fn symmetric_box_probabilities() {
        // the sum of symmetric variables is symmetric
        let w = vec![0.6, 0.5, 0.4];
        let big = 10.0;
        let p = torus_oracle(&[2, 3, 5], &one(w.clone(), 0.0, big)).unwrap();
        assert!((p.value - 0.5).abs() < 1e-7);
        let q = torus_oracle(&[2, 3, 5], &one(w.clone(), -big, big)).unwrap();
        assert!((q.value - 1.0).abs() < 1e-12);
        // the two halves of a split box add up
        let left = torus_oracle(&[2, 3, 5], &one(w.clone(), -0.3, 0.2)).unwrap().value;
        let right = torus_oracle(&[2, 3, 5], &one(w.clone(), 0.2, 0.9)).unwrap().value;
        let both = torus_oracle(&[2, 3, 5], &one(w, -0.3, 0.9)).unwrap().value;
        assert!((left + right - both).abs() < 1e-6);
    }

    #[test]
    fn joint_boxes_reduce_to_single() {
        let w = vec![0.6, 0.5];
        let single = torus_oracle(&[2, 3], &one(w.clone(), -0.2, 0.7)).unwrap().value;
        let loose = LinearBox { weights: vec![0.3, -0.2], lo: -5.0, hi: 5.0 };
        let joint = torus_oracle(&[2, 3], &[LinearBox { weights: w, lo: -0.2, hi: 0.7 }, loose]).unwrap().value;
        assert!((single - joint).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            torus_oracle(&[2, 3, 5, 7, 11, 13], &one(vec![1.0; 6], 0.0, 1.0)),
            Err(LabError::DimensionTooHigh(6))
        ));
        assert!(torus_oracle(&[2, 4], &one(vec![1.0; 2], 0.0, 1.0)).is_err());
        assert!(torus_oracle(&[2, 3], &one(vec![1.0], 0.0, 1.0)).is_err());
    }

    #[test]
    fn trapezoid_expectation_is_exact_on_trig_polynomials() {
        let e = torus_expectation(2, 8, |t| (t[0].cos() + 0.5 * t[1].cos()).powi(2)).unwrap();
        assert!((e - (0.5 + 0.125)).abs() < 1e-15);
        assert!(torus_expectation(6, 4, |_| 1.0).is_err());
    }
}
