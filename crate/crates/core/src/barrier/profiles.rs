//! Empirical one- and two-point profiles of the barrier events, set against
//! their Gaussian shapes.

use serde::{Deserialize, Serialize};

use super::{evaluate_events, TrajectoryModel};
use crate::dirichlet::{DirichletCoeffs, DirichletPolySpec};
use crate::error::{invalid, LabError, Result};
use crate::models::{coeff_covariance, ModelSampler};
use crate::primes::PrimeTable;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnePointConfig {
    pub ell: usize,
    /// Abscissa of `S_ℓ^{(j)}` in the event.
    pub j: usize,
    /// `𝒬 = (S_m^{(m)} - S_ℓ^{(m)})^q`
    pub m: usize,
    pub q: u32,
    /// Windows `[u - 1, u]`.
    pub u_values: Vec<f64>,
    /// `log T` against which `T^{2qβ_m} ≤ T^{1/4}` is checked.
    pub log_t_total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileBin {
    pub u: f64,
    pub count: u64,
    /// `E[|𝒬|² 1(G_ℓ(u))] / E[|𝒬|²]`
    pub mass: f64,
    /// `e^{-u²/t_ℓ} / √t_ℓ`
    pub reference: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndependenceCheck {
    /// `E[|𝒬|² 1(G_ℓ)]`
    pub joint: f64,
    /// `E[|𝒬|²] P(G_ℓ)`
    pub product: f64,
    pub std_err: f64,
}

impl IndependenceCheck {
    pub fn z(&self) -> f64 {
        if self.std_err > 0.0 {
            (self.joint - self.product) / self.std_err
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnePointReport {
    pub trials: u64,
    pub bins: Vec<ProfileBin>,
    pub max_ratio: f64,
    pub total_mass: f64,
    pub q_second_moment: f64,
    pub independence: IndependenceCheck,
}

/// Windows `[u-1, u]` of unit length tiling `[L′_ℓ, U′_ℓ]`.
pub fn default_u_values(model: &TrajectoryModel, ell: usize) -> Vec<f64> {
    let (lo, hi) = model.barriers.primed_band(ell);
    let n = (hi - lo).ceil() as usize;
    (1..=n).map(|i| lo + i as f64).collect()
}

/// `S_m^{(m)} - S_ℓ^{(m)}` restricted to primes above `T_ℓ` (square terms
/// of smaller primes are dropped so that the support is disjoint from the
/// event's).
fn tail_increment(model: &TrajectoryModel, table: &PrimeTable, ell: usize, m: usize) -> Result<DirichletCoeffs> {
    let grid = &model.grid;
    let log_tell = grid.log_t_at(ell);
    let mut c = DirichletCoeffs::band(&DirichletPolySpec::from_grid(grid, m, m)?, table, log_tell)?;
    let keep: Vec<bool> = c.sq_logp.iter().map(|&l| l > log_tell).collect();
    let first = keep.iter().position(|&k| k).unwrap_or(keep.len());
    c.sq_start += first;
    c.sq_logp.drain(..first);
    c.sq_amp.drain(..first);
    Ok(c)
}

pub fn one_point_profile(
    model: &TrajectoryModel,
    table: &PrimeTable,
    sampler: &ModelSampler,
    trials: u64,
    cfg: &OnePointConfig,
) -> Result<OnePointReport> {
    let n = model.grid.capital_l;
    if cfg.ell == 0 || cfg.ell > n || cfg.j < cfg.ell || cfg.j > n || cfg.m < cfg.ell || cfg.m > n {
        return Err(invalid("indices", format!("need 1 ≤ ℓ ≤ j, m ≤ {n}")));
    }
    let lhs = 2.0 * cfg.q as f64 * model.grid.log_t_at(cfg.m);
    if lhs > cfg.log_t_total / 4.0 {
        return Err(LabError::LengthCondition(format!(
            "2q·log T_m = {lhs} exceeds log T/4 = {}",
            cfg.log_t_total / 4.0
        )));
    }
    let (plo, phi) = model.barriers.primed_band(cfg.ell);
    let (umin, umax) = cfg
        .u_values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &u| (a.min(u), b.max(u)));
    if cfg.u_values.is_empty() || umin - 1.0 > plo || umax < phi {
        return Err(invalid("u_values", "windows must cover [L′_ℓ, U′_ℓ]"));
    }
    let q_coeffs = tail_increment(model, table, cfg.ell, cfg.m)?;
    let (ell, j, q) = (cfg.ell, cfg.j, cfg.q);
    // Per trial: (|𝒬|², G_{ℓ-1}, S_ℓ^{(j)}, G_ℓ)
    let (n_lin, n_sq) = model.draw_sizes();
    let n_lin = n_lin.max(q_coeffs.lin_end());
    let n_sq = n_sq.max(q_coeffs.sq_end());
    let rows: Vec<(f64, bool, f64, bool)> = sampler.map_trials(trials as usize, n_lin, n_sq, |trial, lin, sq| {
        let s = model.sample_from(sampler, trial, lin, sq);
        let f = evaluate_events(&s, &model.barriers, f64::INFINITY);
        let qv = q_coeffs.eval_with(lin, sq).powi(q as i32);
        (qv * qv, f.g(ell - 1), s.get(ell, j), f.g(ell))
    });
    let nt = trials as f64;
    let q2: f64 = rows.iter().map(|r| r.0).sum::<f64>() / nt;
    let t_ell = model.grid.t(ell);
    let mut bins = Vec::with_capacity(cfg.u_values.len());
    for &u in &cfg.u_values {
        let (mut count, mut acc) = (0u64, 0.0);
        for r in &rows {
            if r.1 && r.2 >= u - 1.0 && r.2 <= u {
                count += 1;
                acc += r.0;
            }
        }
        let mass = if q2 > 0.0 { acc / nt / q2 } else { 0.0 };
        let reference = (-u * u / t_ell).exp() / t_ell.sqrt();
        bins.push(ProfileBin {
            u,
            count,
            mass,
            reference,
            ratio: mass / reference,
        });
    }
    let max_ratio = bins.iter().map(|b| b.ratio).fold(0.0, f64::max);
    let total_mass = bins.iter().map(|b| b.mass).sum();
    // E[Q² 1_G] - E[Q²]P(G) ≈ mean of (Q² - μ)(1_G - p)
    let p_g = rows.iter().filter(|r| r.3).count() as f64 / nt;
    let joint = rows.iter().filter(|r| r.3).map(|r| r.0).sum::<f64>() / nt;
    let prods: Vec<f64> = rows.iter().map(|r| (r.0 - q2) * (r.3 as u8 as f64 - p_g)).collect();
    let mean = prods.iter().sum::<f64>() / nt;
    let var = prods.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nt - 1.0);
    Ok(OnePointReport {
        trials,
        bins,
        max_ratio,
        total_mass,
        q_second_moment: q2,
        independence: IndependenceCheck {
            joint,
            product: q2 * p_g,
            std_err: (var / nt).sqrt(),
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoPointConfig {
    pub ell: usize,
    pub m: usize,
    pub m_prime: usize,
    pub u_values: Vec<f64>,
    pub v_values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPointBin {
    pub u: f64,
    pub v: f64,
    pub count: u64,
    pub prob: f64,
    /// `e^{-(u+v)²/(4t_ℓ)} / √t_ℓ · e^{-(v-u)²/8}`
    pub reference: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceDifference {
    pub variance: f64,
    pub covariance: f64,
    /// `|E[𝔖²] - E[𝔖𝔖′]|`
    pub difference: f64,
    pub bound: f64,
}

impl CovarianceDifference {
    pub fn holds(&self) -> bool {
        self.difference <= self.bound
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoPointReport {
    pub trials: u64,
    pub bins: Vec<TwoPointBin>,
    pub max_ratio: f64,
    pub correlation: f64,
    /// Largest `|S_ℓ^{(m)} - S_ℓ^{(m′)}|` seen.
    pub max_abs_difference: f64,
    /// Share of `G_{ℓ-1}` samples landing in diagonal bins (`u = v`).
    pub diagonal_share: f64,
    pub covariance: CovarianceDifference,
}

/// Variance of the `m` sum against its covariance with the `m′` sum, both
/// cut at `T_ℓ`, by direct summation over primes.
pub fn covariance_difference(
    table: &PrimeTable,
    log_tell: f64,
    log_tm: f64,
    log_tm_prime: f64,
) -> Result<CovarianceDifference> {
    let spec = |log_tj: f64| {
        DirichletPolySpec::new(1, 1, 0.5 + crate::dirichlet::PARTIAL_SUM_LAMBDA / log_tj, log_tj, log_tell)
    };
    let a = DirichletCoeffs::new(&spec(log_tm)?, table)?;
    let b = DirichletCoeffs::new(&spec(log_tm_prime)?, table)?;
    let variance = coeff_covariance(&a, &a);
    let covariance = coeff_covariance(&a, &b);
    Ok(CovarianceDifference {
        variance,
        covariance,
        difference: (variance - covariance).abs(),
        bound: 2.0,
    })
}

pub fn two_point_profile(
    model: &TrajectoryModel,
    table: &PrimeTable,
    sampler: &ModelSampler,
    trials: u64,
    cfg: &TwoPointConfig,
) -> Result<TwoPointReport> {
    let n = model.grid.capital_l;
    let ell = cfg.ell;
    if ell == 0 || ell > n || cfg.m < ell || cfg.m_prime < ell || cfg.m > n || cfg.m_prime > n {
        return Err(invalid("indices", format!("need 1 ≤ ℓ ≤ m, m′ ≤ {n}")));
    }
    let (m, mp) = (cfg.m, cfg.m_prime);
    let pairs: Vec<(f64, f64, bool)> = model.map_samples(sampler, trials as usize, |s| {
        let f = evaluate_events(s, &model.barriers, f64::INFINITY);
        (s.get(ell, m), s.get(ell, mp), f.g(ell - 1))
    });
    let nt = trials as f64;
    let t_ell = model.grid.t(ell);
    let mut bins = Vec::new();
    let mut diag = 0u64;
    let on_g = pairs.iter().filter(|p| p.2).count() as u64;
    for &u in &cfg.u_values {
        for &v in &cfg.v_values {
            let count = pairs
                .iter()
                .filter(|p| p.2 && p.0 >= u - 1.0 && p.0 <= u && p.1 >= v - 1.0 && p.1 <= v)
                .count() as u64;
            if u == v {
                diag += count;
            }
            let prob = count as f64 / nt;
            let reference = (-(u + v).powi(2) / (4.0 * t_ell)).exp() / t_ell.sqrt() * (-(v - u).powi(2) / 8.0).exp();
            bins.push(TwoPointBin {
                u,
                v,
                count,
                prob,
                reference,
                ratio: prob / reference,
            });
        }
    }
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / nt;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / nt;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for p in &pairs {
        sxy += (p.0 - mx) * (p.1 - my);
        sxx += (p.0 - mx).powi(2);
        syy += (p.1 - my).powi(2);
    }
    let grid = &model.grid;
    Ok(TwoPointReport {
        trials,
        max_ratio: bins.iter().map(|b| b.ratio).fold(0.0, f64::max),
        bins,
        correlation: sxy / (sxx * syy).sqrt(),
        max_abs_difference: pairs.iter().map(|p| (p.0 - p.1).abs()).fold(0.0, f64::max),
        diagonal_share: if on_g > 0 { diag as f64 / on_g as f64 } else { 0.0 },
        covariance: covariance_difference(table, grid.log_t_at(ell), grid.log_t_at(m), grid.log_t_at(mp))?,
    })
}
