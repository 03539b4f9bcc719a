//! Small numerical kernels shared by the lab: compensated summation,
//! Gauss–Legendre rules, the modified Bessel function `I0`, complex
//! log-gamma and Gaussian tails.

use num_complex::Complex64;
use std::f64::consts::PI;

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = KahanSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

pub fn kahan_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<KahanSum>().value()
}

/// Gauss–Legendre nodes and weights on [-1, 1], by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let (p, pm1) = if n == 0 { (1.0, 0.0) } else { (p1, p0) };
    let d = n as f64 * (x * p - pm1) / (x * x - 1.0);
    (p, d)
}

/// A Gauss–Legendre rule mapped to [lo, hi].
#[derive(Debug, Clone)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(n: usize) -> Self {
        let (nodes, weights) = gauss_legendre(n);
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights on [lo, hi].
    pub fn mapped(&self, lo: f64, hi: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, lo: f64, hi: f64, mut f: F) -> f64 {
        let mut acc = KahanSum::new();
        for (x, w) in self.mapped(lo, hi) {
            acc.add(w * f(x));
        }
        acc.value()
    }
}

/// Modified Bessel function of the first kind, order zero, by its power
/// series `sum (x/2)^{2k} / (k!)^2`, summed until terms fall below 1e-17
/// relative. Intended for |x| up to a few hundred.
pub fn bessel_i0(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut acc = KahanSum::new();
    acc.add(1.0);
    let mut k = 1.0;
    loop {
        term *= q / (k * k);
        acc.add(term);
        if term < 1e-17 * acc.value() {
            break;
        }
        k += 1.0;
        if k > 10_000.0 {
            break;
        }
    }
    acc.value()
}

/// `ln I0(x)`, switching to the asymptotic expansion when the series
/// would overflow.
pub fn ln_bessel_i0(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 500.0 {
        return bessel_i0(ax).ln();
    }
    // I0(x) ~ e^x / sqrt(2 pi x) * (1 + 1/(8x) + 9/(128 x^2) + ...)
    let inv = 1.0 / ax;
    let series = 1.0 + inv / 8.0 + 9.0 * inv * inv / 128.0 + 225.0 * inv.powi(3) / 3072.0;
    ax - 0.5 * (2.0 * PI * ax).ln() + series.ln()
}

/// Complex log-gamma by upward recurrence and the Stirling series.
pub fn ln_gamma_complex(z: Complex64) -> Complex64 {
    let mut shift = Complex64::new(0.0, 0.0);
    let mut w = z;
    while w.re < 10.0 {
        shift += w.ln();
        w += 1.0;
    }
    let inv = 1.0 / w;
    let inv2 = inv * inv;
    // Bernoulli terms B_{2k} / (2k (2k-1) w^{2k-1})
    const B: [f64; 8] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360360.0,
        1.0 / 156.0,
        -3617.0 / 122400.0,
    ];
    let mut series = Complex64::new(0.0, 0.0);
    let mut p = inv;
    for b in B {
        series += b * p;
        p *= inv2;
    }
    (w - 0.5) * w.ln() - w + 0.5 * (2.0 * PI).ln() + series - shift
}

/// Real `ln Γ(x)` for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    ln_gamma_complex(Complex64::new(x, 0.0)).re
}

/// Standard normal CDF via `erfc`.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Complementary error function: Maclaurin series near zero, Lentz
/// continued fraction beyond 0.5.
pub fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < 0.5 {
        return 1.0 - erf_small(x);
    }
    if x > 27.0 {
        return 0.0;
    }
    // Continued fraction (Lentz) for erfc, valid and fast for x >= 0.5.
    let x2 = x * x;
    let tiny = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for n in 1..500 {
        let an = n as f64 * 0.5;
        // erfc(x) = e^{-x²}/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
        d = x + an * d;
        d = if d.abs() < tiny { tiny } else { d };
        c = x + an / c;
        c = if c.abs() < tiny { tiny } else { c };
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x2).exp() / (f * PI.sqrt())
}

fn erf_small(x: f64) -> f64 {
    // Maclaurin series, converges quickly for |x| < 0.5.
    let x2 = x * x;
    let mut term = x;
    let mut acc = x;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= -x2 / n;
        let contrib = term / (2.0 * n + 1.0);
        acc += contrib;
        if contrib.abs() < 1e-18 {
            break;
        }
    }
    2.0 / PI.sqrt() * acc
}

/// Gaussian upper tail `∫_v^∞ e^{-x²/2}/√(2π) dx` by composite
/// Gauss–Legendre quadrature on [v, v + 40].
pub fn gaussian_tail_quadrature(v: f64) -> f64 {
    if v < 0.0 {
        return 1.0 - gaussian_tail_quadrature(-v);
    }
    let rule = GaussRule::new(20);
    let pieces = 160;
    let h = 40.0 / pieces as f64;
    let mut acc = KahanSum::new();
    for i in 0..pieces {
        let lo = v + i as f64 * h;
        acc.add(rule.integrate(lo, lo + h, |x| {
            (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
        }));
    }
    acc.value()
}

/// `ln(n!)`, exact summation for small n.
pub fn ln_factorial(n: u64) -> f64 {
    if n < 64 {
        (2..=n).map(|k| (k as f64).ln()).sum()
    } else {
        ln_gamma(n as f64 + 1.0)
    }
}

/// `(2q)! / (2^q q!) = (2q-1)!!`, the Gaussian moment constant.
pub fn double_factorial_odd(q: u32) -> f64 {
    (1..=q).map(|i| (2 * i - 1) as f64).product()
}

/// `log(e^a + e^b)` without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let rule = GaussRule::new(8);
        // degree 15 is exact for 8 nodes
        let v = rule.integrate(-1.0, 1.0, |x| x.powi(14) + 3.0 * x.powi(3));
        assert!((v - 2.0 / 15.0).abs() < 1e-14);
        let (x, w) = gauss_legendre(64);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn bessel_i0_matches_quadrature_of_cosine_mgf() {
        // I0(c) = (1/2pi) ∫ exp(c cos θ) dθ
        let rule = GaussRule::new(64);
        for c in [0.1, 0.70710678, 1.0, 3.0, 10.0] {
            let q = rule.integrate(0.0, PI, |t| (c * t.cos()).exp()) / PI;
            assert!((bessel_i0(c) - q).abs() < 1e-12 * q, "c={c}");
        }
        assert!((bessel_i0(std::f64::consts::FRAC_1_SQRT_2) - 1.128_960_9).abs() < 1e-6);
    }

    #[test]
    fn ln_bessel_asymptotic_is_continuous() {
        let a = bessel_i0(499.0).ln();
        let b = ln_bessel_i0(501.0);
        assert!((b - a - 2.0).abs() < 0.01);
        assert!((ln_bessel_i0(600.0) - (600.0 - 0.5 * (2.0 * PI * 600.0).ln())).abs() < 1e-3);
    }

    #[test]
    fn ln_gamma_known_values() {
        assert!((ln_gamma(5.0) - 24f64.ln()).abs() < 1e-13);
        assert!((ln_gamma(0.5) - PI.sqrt().ln()).abs() < 1e-13);
        // |Γ(iy)|² = π / (y sinh πy)
        let y = 3.0;
        let g = ln_gamma_complex(Complex64::new(0.0, y));
        let expect = 0.5 * (PI / (y * (PI * y).sinh())).ln();
        assert!((g.re - expect).abs() < 1e-12);
    }

    #[test]
    fn erfc_and_gaussian_tail_agree() {
        for v in [0.0, 0.5, 1.0, 1.5, 2.0, 4.0] {
            let a = gaussian_tail_quadrature(v);
            let b = 1.0 - normal_cdf(v);
            assert!((a - b).abs() < 1e-13, "v={v}: {a} vs {b}");
        }
        assert!((normal_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
        assert!((erfc(3.0) - 2.209_049_699_858_544e-5).abs() < 1e-19);
    }

    #[test]
    fn kahan_recovers_lost_bits() {
        let mut acc = KahanSum::new();
        acc.add(1.0);
        for _ in 0..1000 {
            acc.add(1e-17);
        }
        assert!((acc.value() - (1.0 + 1e-14)).abs() < 1e-17);
    }
}
