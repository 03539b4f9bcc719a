//! `ζ(1/2+it)` at desk heights: Euler–Maclaurin summation below
//! `RS_THRESHOLD`, Riemann–Siegel with four correction terms above. Also
//! the τ-sampling experiments (level sets, moments, short maxima).

use std::f64::consts::{PI, TAU};
use std::sync::OnceLock;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::numeric::{ln_gamma_complex, KahanSum};
use crate::rng::StreamFactory;

pub const MAX_HEIGHT: f64 = 1e10;
pub const RS_THRESHOLD: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZetaMethod {
    EulerMaclaurin,
    RiemannSiegel,
}

impl ZetaMethod {
    pub fn tag(&self) -> &'static str {
        match self {
            Self::EulerMaclaurin => "euler_maclaurin",
            Self::RiemannSiegel => "riemann_siegel",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZetaPoint {
    pub t: f64,
    pub value: Complex64,
    /// `-∞` at an exact zero.
    pub log_abs: f64,
    pub method: ZetaMethod,
    pub est_error: f64,
}

const BERNOULLI_2K: [f64; 15] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
    8553103.0 / 6.0,
    -23749461029.0 / 870.0,
    8615841276005.0 / 14322.0,
];

/// `ζ(s)` for `Re s = 1/2`-ish by Euler–Maclaurin with `N ≈ |t|/π + 20`
/// terms. Returns the value and the size of the first omitted correction.
pub fn zeta_euler_maclaurin(s: Complex64) -> (Complex64, f64) {
    let n = (s.im.abs() / PI).ceil() as usize + 20;
    zeta_euler_maclaurin_n(s, n, 14)
}

pub fn zeta_euler_maclaurin_n(s: Complex64, n: usize, terms: usize) -> (Complex64, f64) {
    let terms = terms.min(BERNOULLI_2K.len() - 1);
    let (mut re, mut im) = (KahanSum::new(), KahanSum::new());
    for k in 1..n {
        let v = (-s * (k as f64).ln()).exp();
        re.add(v.re);
        im.add(v.im);
    }
    let nf = n as f64;
    let ln_n = nf.ln();
    let n_s = (-s * ln_n).exp(); // N^{-s}
    let mut total = Complex64::new(re.value(), im.value()) + n_s * nf / (s - 1.0) + 0.5 * n_s;
    // T_k = B_{2k}/(2k)! · s(s+1)…(s+2k-2) · N^{-s-2k+1}
    let mut rising = s; // s(s+1)…(s+2k-2)
    let mut npow = n_s / nf; // N^{-s-2k+1}
    let mut fact = 2.0; // (2k)!
    let mut omitted = 0.0;
    for k in 1..=terms + 1 {
        let term = BERNOULLI_2K[k - 1] / fact * rising * npow;
        if k > terms {
            omitted = term.norm();
            break;
        }
        total += term;
        let a = 2.0 * k as f64;
        rising *= (s + (a - 1.0)) * (s + a);
        npow /= nf * nf;
        fact *= (a + 1.0) * (a + 2.0);
    }
    (total, omitted)
}

/// Riemann–Siegel theta `arg Γ(1/4 + it/2) - (t/2) log π`.
pub fn rs_theta(t: f64) -> f64 {
    if t.abs() < 50.0 {
        let g = ln_gamma_complex(Complex64::new(0.25, 0.5 * t));
        return g.im - 0.5 * t * PI.ln();
    }
    let sign = t.signum();
    let t = t.abs();
    let inv = 1.0 / t;
    let inv2 = inv * inv;
    let series = inv
        * (1.0 / 48.0
            + inv2
                * (7.0 / 5760.0
                    + inv2 * (31.0 / 80640.0 + inv2 * (127.0 / 430080.0 + inv2 * 511.0 / 1216512.0))));
    sign * (0.5 * t * (t / TAU).ln() - 0.5 * t - PI / 8.0 + series)
}

/// Taylor coefficients of `Ψ(p) = cos(2π(p² - p - 1/16)) / cos(2πp)` about
/// `p = 1/2` (Ψ is entire), by a discrete Cauchy integral on `|p - 1/2| = R`.
fn psi_coeffs() -> &'static [f64] {
    static COEFFS: OnceLock<Vec<f64>> = OnceLock::new();
    COEFFS.get_or_init(|| {
        const M: usize = 256;
        const DEG: usize = 48;
        const R: f64 = 0.6;
        let psi = |z: Complex64| (TAU * (z * z - z - 1.0 / 16.0)).cos() / (TAU * z).cos();
        let vals: Vec<Complex64> = (0..M)
            .map(|k| psi(Complex64::new(0.5, 0.0) + Complex64::from_polar(R, TAU * k as f64 / M as f64)))
            .collect();
        (0..=DEG)
            .map(|n| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (k, v) in vals.iter().enumerate() {
                    acc += v * Complex64::from_polar(1.0, -TAU * (n * k) as f64 / M as f64);
                }
                acc.re / M as f64 / R.powi(n as i32)
            })
            .collect()
    })
}

/// `Ψ^{(k)}(p)` for `k ≤ 12`.
fn psi_derivs(p: f64) -> [f64; 13] {
    let c = psi_coeffs();
    let x = p - 0.5;
    let mut out = [0.0; 13];
    for (k, slot) in out.iter_mut().enumerate() {
        // Σ_n n!/(n-k)! c_n x^{n-k}, Horner from the top.
        let mut acc = 0.0;
        for n in (k..c.len()).rev() {
            let mut falling = 1.0;
            for i in 0..k {
                falling *= (n - i) as f64;
            }
            acc = acc * x + falling * c[n];
        }
        *slot = acc;
    }
    out
}

/// Riemann–Siegel correction coefficients `C_0 .. C_4` at fractional part `p`.
pub fn rs_coefficients(p: f64) -> [f64; 5] {
    let d = psi_derivs(p);
    let p2 = PI * PI;
    let p4 = p2 * p2;
    let p6 = p4 * p2;
    let p8 = p4 * p4;
    [
        d[0],
        -d[3] / (96.0 * p2),
        d[2] / (64.0 * p2) + d[6] / (18432.0 * p4),
        -d[1] / (64.0 * p2) - d[5] / (3840.0 * p4) - d[9] / (5308416.0 * p6),
        d[0] / (128.0 * p2)
            + 19.0 * d[4] / (24576.0 * p4)
            + 11.0 * d[8] / (5898240.0 * p6)
            + d[12] / (2038431744.0 * p8),
    ]
}

/// Hardy `Z(t)` by Riemann–Siegel, with an error estimate from the last
/// included correction and the phase rounding.
pub fn hardy_z_rs(t: f64) -> (f64, f64) {
    let a = (t / TAU).sqrt();
    let n = a.floor() as usize;
    let p = a - n as f64;
    let th = rs_theta(t);
    let mut sum = KahanSum::new();
    for k in 1..=n {
        let kf = k as f64;
        sum.add((th - t * kf.ln()).cos() / kf.sqrt());
    }
    let c = rs_coefficients(p);
    let w = 1.0 / a; // (t/2π)^{-1/2}
    let mut r = 0.0;
    let mut wp = 1.0;
    let mut last = 0.0;
    for ck in c {
        last = ck * wp;
        r += last;
        wp *= w;
    }
    let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
    let scale = w.sqrt();
    let z = 2.0 * sum.value() + sign * scale * r;
    let phase_err = f64::EPSILON * (t * t.ln()).abs() * 2.0 * (n as f64).sqrt();
    (z, scale * (last.abs() * w + 1e-3 * wp) + phase_err)
}

/// `ζ(1/2 + it)`; negative `t` by conjugation.
pub fn zeta_half_line(t: f64) -> Result<ZetaPoint> {
    if !t.is_finite() || t.abs() > MAX_HEIGHT {
        return Err(LabError::HeightOutOfRange(t));
    }
    let at = t.abs();
    let (mut value, est_error, method) = if at < RS_THRESHOLD {
        let (v, e) = zeta_euler_maclaurin(Complex64::new(0.5, at));
        (v, e + 1e-14 * at.max(1.0), ZetaMethod::EulerMaclaurin)
    } else {
        let (z, e) = hardy_z_rs(at);
        (
            Complex64::from_polar(z, -rs_theta(at)),
            e,
            ZetaMethod::RiemannSiegel,
        )
    };
    if t < 0.0 {
        value = value.conj();
    }
    let norm = value.norm();
    Ok(ZetaPoint {
        t,
        value,
        log_abs: if norm == 0.0 { f64::NEG_INFINITY } else { norm.ln() },
        method,
        est_error,
    })
}

/// `log|ζ(1/2+iτ)|` for `n` uniform τ in `[T, 2T]`; sample `i` uses its own
/// trial stream, so the result does not depend on the thread count.
pub fn sample_log_abs(t_lo: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    let streams = StreamFactory::new(seed, "zeta_engine");
    (0..n)
        .into_par_iter()
        .map(|i| {
            let u = streams.trial(i as u64).uniform();
            zeta_half_line(t_lo * (1.0 + u)).map(|z| z.log_abs)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelSetEstimate {
    pub t: f64,
    pub v: f64,
    pub fraction: f64,
    pub n_samples: usize,
    pub std_err: f64,
}

pub fn level_set_from_samples(t: f64, v: f64, log_abs: &[f64]) -> LevelSetEstimate {
    let hits = log_abs.iter().filter(|&&x| x > v).count();
    let n = log_abs.len();
    let fraction = hits as f64 / n as f64;
    LevelSetEstimate {
        t,
        v,
        fraction,
        n_samples: n,
        std_err: (fraction * (1.0 - fraction) / n as f64).sqrt(),
    }
}

pub fn level_set_measure(t: f64, v: f64, n_samples: usize, seed: u64) -> Result<LevelSetEstimate> {
    if n_samples < 1000 {
        return Err(crate::error::invalid("n_samples", "need at least 1000 samples"));
    }
    let xs = sample_log_abs(t, n_samples, seed)?;
    Ok(level_set_from_samples(t, v, &xs))
}

/// Direct mean of `e^{2kX}` and its level-set (integration by parts) form
/// `E[e^{2k min(X, L_0)}] + ∫_{L_0}^{L_top} 2k e^{2kV} P(X > V) dV`.
///
/// Between consecutive levels the tail function is replaced by the average
/// of its one-sided values at the ends, which is exact whenever no sample
/// lies strictly inside a level interval.
pub fn moment_via_levelsets_from(log_abs: &[f64], k: f64, levels: &[f64]) -> Result<(f64, f64)> {
    if levels.is_empty() || levels.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(crate::error::invalid("levels", "need a strictly ascending sequence"));
    }
    let n = log_abs.len() as f64;
    let top = *levels.last().unwrap();
    let observed = log_abs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if observed > top {
        return Err(LabError::LevelsTooNarrow { observed, top });
    }
    // |ζ|^0 = 1 even at zeros, where 0·(-∞) would give NaN
    let pow = |x: f64| if k == 0.0 { 1.0 } else { (2.0 * k * x).exp() };
    let direct = log_abs.iter().map(|&x| pow(x)).collect::<KahanSum>().value() / n;
    let l0 = levels[0];
    let mut ibp = log_abs
        .iter()
        .map(|&x| pow(x.min(l0)))
        .collect::<KahanSum>()
        .value()
        / n;
    if k != 0.0 {
        let mut sorted: Vec<f64> = log_abs.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let greater = |v: f64| (sorted.len() - sorted.partition_point(|&x| x <= v)) as f64 / n;
        let at_least = |v: f64| (sorted.len() - sorted.partition_point(|&x| x < v)) as f64 / n;
        let mut acc = KahanSum::new();
        for w in levels.windows(2) {
            let (a, b) = (w[0], w[1]);
            // ∫_a^b 2k e^{2kV} dV, written to avoid cancellation
            let mass = (2.0 * k * a).exp() * (2.0 * k * (b - a)).exp_m1();
            acc.add(mass * 0.5 * (greater(a) + at_least(b)));
        }
        ibp += acc.value();
    }
    Ok((direct, ibp))
}

pub fn moment_via_levelsets(
    t: f64,
    k: f64,
    levels: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let xs = sample_log_abs(t, n_samples, seed)?;
    moment_via_levelsets_from(&xs, k, levels)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShortMax {
    pub t_center: f64,
    pub half_width: f64,
    pub max_abs: f64,
    pub argmax: f64,
    pub grid_points: usize,
    /// `(log T)^{√(1+γ)} / (log log T)^{1/(4√(1+γ))}`
    pub benchmark: f64,
}

/// Max of `|ζ|` on `t_center + h`, `|h| ≤ (log T)^γ`, sampled on a uniform
/// grid with a power-of-two number of cells, so halving the step gives a
/// superset of points.
pub fn short_interval_max(t_center: f64, gamma_exp: f64, log_t: f64, grid_step: f64) -> Result<ShortMax> {
    if !(grid_step > 0.0 && grid_step <= 0.05) {
        return Err(crate::error::invalid("grid_step", "must lie in (0, 0.05]"));
    }
    let half_width = log_t.powf(gamma_exp);
    let cells = ((2.0 * half_width / grid_step).ceil() as usize).next_power_of_two();
    let h = 2.0 * half_width / cells as f64;
    let pts = (0..=cells)
        .into_par_iter()
        .map(|i| {
            let t = t_center - half_width + i as f64 * h;
            zeta_half_line(t).map(|z| (z.value.norm(), t))
        })
        .collect::<Result<Vec<_>>>()?;
    let (max_abs, argmax) = pts
        .iter()
        .cloned()
        .fold((f64::NEG_INFINITY, t_center), |acc, x| if x.0 > acc.0 { x } else { acc });
    let r = (1.0 + gamma_exp).sqrt();
    Ok(ShortMax {
        t_center,
        half_width,
        max_abs,
        argmax,
        grid_points: cells + 1,
        benchmark: log_t.powf(r) / log_t.ln().powf(1.0 / (4.0 * r)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_at_half() {
        let z = zeta_half_line(0.0).unwrap();
        assert!((z.value.re + 1.460_354_508_809_586_8).abs() < 1e-12);
        assert!(z.value.im.abs() < 1e-15);
        // More terms and corrections change nothing.
        let (w, _) = zeta_euler_maclaurin_n(Complex64::new(0.5, 0.0), 60, 14);
        assert!((w - z.value).norm() < 1e-13);
    }

    #[test]
    fn first_zero_and_sign_change() {
        assert!(zeta_half_line(14.134725).unwrap().value.norm() < 1e-4);
        let z = |t: f64| (zeta_half_line(t).unwrap().value * Complex64::from_polar(1.0, rs_theta(t))).re;
        assert!(z(14.13) * z(14.14) < 0.0);
    }

    #[test]
    fn theta_branches_meet() {
        for t in [50.0, 80.0, 200.0] {
            let g = ln_gamma_complex(Complex64::new(0.25, 0.5 * t)).im - 0.5 * t * PI.ln();
            assert!((g - rs_theta(t)).abs() < 1e-11, "{t}");
        }
    }

    #[test]
    fn psi_series_matches_closed_form() {
        for p in [0.0, 0.1, 0.3, 0.5, 0.77, 0.999] {
            let direct = (TAU * (p * p - p - 1.0 / 16.0)).cos() / (TAU * p).cos();
            assert!((psi_derivs(p)[0] - direct).abs() < 1e-12, "{p}");
        }
        // Central difference for Ψ'.
        let h = 1e-5;
        let p = 0.37;
        let fd = (psi_derivs(p + h)[0] - psi_derivs(p - h)[0]) / (2.0 * h);
        assert!((fd - psi_derivs(p)[1]).abs() < 1e-8);
    }

    #[test]
    fn riemann_siegel_agrees_with_euler_maclaurin() {
        for t in [1000.0, 1234.567, 5000.25, 20000.0] {
            let (em, _) = zeta_euler_maclaurin(Complex64::new(0.5, t));
            let rs = zeta_half_line(t).unwrap();
            assert_eq!(rs.method, ZetaMethod::RiemannSiegel);
            assert!((em - rs.value).norm() < 1e-8 * em.norm().max(1.0), "{t}");
            assert!(rs.est_error < 1e-6);
        }
    }

    #[test]
    fn conjugation() {
        for t in [0.7, 33.3, 999.0, 4321.0] {
            let a = zeta_half_line(t).unwrap().value;
            let b = zeta_half_line(-t).unwrap().value;
            assert_eq!(a.conj(), b);
        }
        assert!(matches!(zeta_half_line(2e10), Err(LabError::HeightOutOfRange(_))));
    }

    #[test]
    fn ibp_identity_on_order_statistics() {
        let xs = [-1.3, -0.2, 0.0, 0.4, 1.1, 2.5, f64::NEG_INFINITY];
        let mut levels: Vec<f64> = xs.iter().cloned().filter(|x| x.is_finite()).collect();
        levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let (d, i) = moment_via_levelsets_from(&xs, 1.0, &levels).unwrap();
        assert!((d - i).abs() < 1e-12 * d);
        let (d, i) = moment_via_levelsets_from(&xs, 0.0, &[-5.0, 5.0]).unwrap();
        assert_eq!((d, i), (1.0, 1.0));
        assert!(matches!(
            moment_via_levelsets_from(&xs, 1.0, &[-5.0, 2.0]),
            Err(LabError::LevelsTooNarrow { .. })
        ));
    }

    #[test]
    fn short_max_refines_monotonically() {
        let a = short_interval_max(14.1347, 0.0, 10.0, 0.05).unwrap();
        let b = short_interval_max(14.1347, 0.0, 10.0, 0.025).unwrap();
        assert_eq!(a.half_width, 1.0);
        assert!(b.max_abs >= a.max_abs);
        assert_eq!(b.grid_points, 2 * a.grid_points - 1);
    }
}
