//! Multiscale checkpoint grid: scales `β_ℓ = e^{ℓ-1}/√log T`, the
//! log-log times `t_ℓ`, barrier widths `c_ℓ = β_ℓ^{-γ}` and the barriers
//! themselves.
//!
//! Everything is computed in `(log T, β)` space; `T` itself is never
//! exponentiated.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, LabError, Result};

/// Default barrier exponent.
pub const DEFAULT_GAMMA: f64 = 1.0 / 25.0;
/// Default desk-scale stand-in for the `10⁴ k` cutoff.
pub const DEFAULT_CUTOFF: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    /// Natural log of T.
    pub log_t: f64,
    /// Deviation order k.
    pub k: f64,
    /// Deviation level V.
    pub v: f64,
    /// Barrier exponent γ, in (0, 1/20).
    pub gamma: f64,
    /// Cutoff θ: the grid keeps scales with `β_ℓ ≤ e^{-θ}` plus one more.
    pub cutoff: f64,
}

impl GridParams {
    /// Parameters with `V = k log log T` and the default γ and cutoff.
    pub fn new(log_t: f64, k: f64) -> Self {
        Self {
            log_t,
            k,
            v: k * log_t.ln(),
            gamma: DEFAULT_GAMMA,
            cutoff: DEFAULT_CUTOFF,
        }
    }

    pub fn with_cutoff(mut self, cutoff: f64) -> Self {
        self.cutoff = cutoff;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_v(mut self, v: f64) -> Self {
        self.v = v;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.log_t > std::f64::consts::E) {
            return Err(LabError::DegenerateT(self.log_t));
        }
        if !(self.k > 0.0) {
            return Err(invalid("k", format!("{} must be positive", self.k)));
        }
        if !(self.gamma > 0.0 && self.gamma < 0.05) {
            return Err(invalid("gamma", format!("{} must lie in (0, 1/20)", self.gamma)));
        }
        if !(self.cutoff > 0.0) {
            return Err(invalid("cutoff", format!("{} must be positive", self.cutoff)));
        }
        let kappa = self.v / self.log_t.ln();
        if !(kappa >= 0.5 * self.k && kappa <= 2.0 * self.k) {
            return Err(invalid(
                "v",
                format!("V/log log T = {kappa} must lie in [k/2, 2k] = [{}, {}]", self.k / 2.0, 2.0 * self.k),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointGrid {
    pub params: GridParams,
    /// `β_1..β_𝓛`.
    pub betas: Vec<f64>,
    /// `t_ℓ = log log T_ℓ = log(β_ℓ log T)`.
    pub tls: Vec<f64>,
    /// `c_ℓ = β_ℓ^{-γ}`.
    pub cls: Vec<f64>,
    /// Number of checkpoints 𝓛.
    pub capital_l: usize,
    /// Gradient κ = V / log log T.
    pub kappa: f64,
}

/// Builds the grid with `𝓛 = 1 + max{ℓ ≥ 1 : β_ℓ ≤ e^{-θ}}`.
pub fn build_grid(params: GridParams) -> Result<CheckpointGrid> {
    params.validate()?;
    let beta1 = 1.0 / params.log_t.sqrt();
    let bound = (-params.cutoff).exp();
    if beta1 > bound {
        return Err(LabError::CutoffTooLarge { beta1, bound });
    }
    // β_ℓ ≤ e^{-θ}  ⟺  ℓ - 1 ≤ -θ + ½ log log T; scan rather than solve so
    // the boundary case is decided by the same comparison as the definition.
    let mut max_ell = 1usize;
    while beta_at(params.log_t, max_ell + 1) <= bound {
        max_ell += 1;
    }
    let capital_l = max_ell + 1;
    let betas: Vec<f64> = (1..=capital_l).map(|l| beta_at(params.log_t, l)).collect();
    // t_ℓ = ½ log log T + (ℓ - 1). t_1 is snapped to a 2^-40 lattice so the
    // unit steps are exact in floating point.
    let lattice = (1u64 << 40) as f64;
    let half_loglog = (0.5 * params.log_t.ln() * lattice).round() / lattice;
    let tls = (0..capital_l).map(|i| half_loglog + i as f64).collect();
    let cls = betas.iter().map(|b| b.powf(-params.gamma)).collect();
    Ok(CheckpointGrid {
        params,
        betas,
        tls,
        cls,
        capital_l,
        kappa: params.v / params.log_t.ln(),
    })
}

fn beta_at(log_t: f64, ell: usize) -> f64 {
    ((ell - 1) as f64).exp() / log_t.sqrt()
}

impl CheckpointGrid {
    /// `β_ℓ` for 1-based ℓ.
    pub fn beta(&self, ell: usize) -> f64 {
        self.betas[ell - 1]
    }

    pub fn t(&self, ell: usize) -> f64 {
        self.tls[ell - 1]
    }

    pub fn c(&self, ell: usize) -> f64 {
        self.cls[ell - 1]
    }

    /// `log T_ℓ = β_ℓ log T`; `log T_0 = 0`.
    pub fn log_t_at(&self, ell: usize) -> f64 {
        if ell == 0 {
            0.0
        } else {
            self.beta(ell) * self.params.log_t
        }
    }

    /// `#{j : ℓ ≤ j ≤ 𝓛}`.
    pub fn abscissa_count(&self, ell: usize) -> usize {
        self.capital_l + 1 - ell
    }

    /// Serializable document `{log_t, k, v, gamma, cutoff, betas, tls, cls, capital_l}`.
    pub fn to_document(&self) -> GridDocument {
        GridDocument {
            log_t: self.params.log_t,
            k: self.params.k,
            v: self.params.v,
            gamma: self.params.gamma,
            cutoff: self.params.cutoff,
            betas: self.betas.clone(),
            tls: self.tls.clone(),
            cls: self.cls.clone(),
            capital_l: self.capital_l,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDocument {
    pub log_t: f64,
    pub k: f64,
    pub v: f64,
    pub gamma: f64,
    pub cutoff: f64,
    pub betas: Vec<f64>,
    pub tls: Vec<f64>,
    pub cls: Vec<f64>,
    pub capital_l: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarrierSet {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub lower_prime: Vec<f64>,
    pub upper_prime: Vec<f64>,
}

impl BarrierSet {
    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    /// `[L_ℓ, U_ℓ]` for 1-based ℓ.
    pub fn band(&self, ell: usize) -> (f64, f64) {
        (self.lower[ell - 1], self.upper[ell - 1])
    }

    pub fn primed_band(&self, ell: usize) -> (f64, f64) {
        (self.lower_prime[ell - 1], self.upper_prime[ell - 1])
    }
}

/// `L_ℓ, U_ℓ = κ t_ℓ ∓ c_ℓ` and `L′_ℓ, U′_ℓ = κ t_ℓ ∓ 4 c_ℓ`.
pub fn barrier_bounds(grid: &CheckpointGrid) -> BarrierSet {
    let mid = |i: usize| grid.kappa * grid.tls[i];
    let n = grid.capital_l;
    BarrierSet {
        lower: (0..n).map(|i| mid(i) - grid.cls[i]).collect(),
        upper: (0..n).map(|i| mid(i) + grid.cls[i]).collect(),
        lower_prime: (0..n).map(|i| mid(i) - 4.0 * grid.cls[i]).collect(),
        upper_prime: (0..n).map(|i| mid(i) + 4.0 * grid.cls[i]).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Truncation {
    pub m: usize,
    /// True when no `m ≤ 𝓛` satisfies `β_m > β_ℓ^γ` and 𝓛 was returned.
    pub clamped: bool,
}

/// Smallest `m` with `β_m > β_ℓ^γ`, clamped to 𝓛.
pub fn truncation_index(grid: &CheckpointGrid, ell: usize) -> Result<Truncation> {
    if ell == 0 || ell > grid.capital_l {
        return Err(invalid("ell", format!("{ell} outside 1..={}", grid.capital_l)));
    }
    let threshold = grid.beta(ell).powf(grid.params.gamma);
    Ok(grid
        .betas
        .iter()
        .position(|&b| b > threshold)
        .map(|i| Truncation { m: i + 1, clamped: false })
        .unwrap_or(Truncation {
            m: grid.capital_l,
            clamped: true,
        }))
}

/// `β_ℓ · Δ_ℓ^{20}` with `Δ_ℓ = c_ℓ`: the exponent of the Dirichlet
/// polynomial length after expanding the indicator polynomial. It stays
/// below 1 whenever γ < 1/20.
pub fn key_condition_exponent(grid: &CheckpointGrid, ell: usize) -> f64 {
    grid.beta(ell) * grid.c(ell).powi(20)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desk() -> CheckpointGrid {
        build_grid(GridParams::new(1e4, 2.0)).unwrap()
    }

    #[test]
    fn reference_grid_values() {
        let g = desk();
        assert_eq!(g.capital_l, 4);
        assert!((g.beta(1) - 0.01).abs() < 1e-15);
        assert!((g.beta(4) - 3f64.exp() / 100.0).abs() < 1e-15);
        assert!((g.beta(4) - 0.2009).abs() < 1e-4);
        assert!((g.c(1) - (100f64.ln() / 25.0).exp()).abs() < 1e-12);
        assert!((g.c(1) - 1.2023).abs() < 1e-4);
    }

    #[test]
    fn barrier_midpoint_and_widths() {
        let g = desk();
        let b = barrier_bounds(&g);
        assert!((g.kappa - 2.0).abs() < 1e-12);
        assert!((g.t(1) - 100f64.ln()).abs() < 1e-12);
        assert!((0.5 * (b.lower[0] + b.upper[0]) - 9.21).abs() < 1e-2);
        for l in 1..=g.capital_l {
            let (lo, hi) = b.band(l);
            let (lp, hp) = b.primed_band(l);
            assert!((hi - lo - 2.0 * g.c(l)).abs() < 1e-12);
            assert!((hp - hi - 3.0 * g.c(l)).abs() < 1e-12);
            assert!((lo - lp - 3.0 * g.c(l)).abs() < 1e-12);
            assert!((hp - lp - 8.0 * g.c(l)).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_gradient_gives_symmetric_barriers() {
        // κ = 0 is outside the V ∈ [k/2, 2k]·log log T window; build directly.
        let mut g = desk();
        g.kappa = 0.0;
        let b = barrier_bounds(&g);
        for l in 1..=g.capital_l {
            assert_eq!(b.lower[l - 1], -g.c(l));
            assert_eq!(b.upper[l - 1], g.c(l));
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(
            build_grid(GridParams::new(2.0, 1.0)),
            Err(LabError::DegenerateT(_))
        ));
        assert!(matches!(
            build_grid(GridParams::new(1e4, 1.0).with_cutoff(5.0)),
            Err(LabError::CutoffTooLarge { .. })
        ));
        assert!(build_grid(GridParams::new(1e4, 1.0).with_gamma(0.06)).is_err());
        assert!(build_grid(GridParams::new(1e4, 1.0).with_v(30.0)).is_err());
    }

    #[test]
    fn truncation_scan() {
        let g = desk();
        // β_1 = 0.01: threshold 0.01^0.04 ≈ 0.8318, above every β on this grid.
        let thr = 0.01f64.powf(0.04);
        assert!((thr - 0.8318).abs() < 1e-4);
        let tr = truncation_index(&g, 1).unwrap();
        assert_eq!(tr, Truncation { m: 4, clamped: true });
        // A long grid reaches the threshold.
        let long = build_grid(GridParams::new(1e12, 2.0).with_cutoff(0.1)).unwrap();
        let tr = truncation_index(&long, 1).unwrap();
        assert!(!tr.clamped);
        assert!(long.beta(tr.m) > long.beta(1).powf(long.params.gamma));
        assert!(long.beta(tr.m - 1) <= long.beta(1).powf(long.params.gamma));
        assert!(truncation_index(&g, 0).is_err());
        assert!(truncation_index(&g, 5).is_err());
    }

    #[test]
    fn last_checkpoint_never_truncates_earlier() {
        for log_t in [1e3, 1e4, 1e5, 1e8] {
            for cutoff in [1.0, 2.0, 3.0] {
                let g = build_grid(GridParams::new(log_t, 1.0).with_cutoff(cutoff)).unwrap();
                let tr = truncation_index(&g, g.capital_l).unwrap();
                assert_eq!(tr.m, g.capital_l);
            }
        }
    }

    #[test]
    fn gamma_to_zero_clamps() {
        let g = build_grid(GridParams::new(1e4, 2.0).with_gamma(1e-12)).unwrap();
        for l in 1..=g.capital_l {
            assert!(truncation_index(&g, l).unwrap().clamped);
        }
    }

    #[test]
    fn unit_steps_are_exact() {
        for log_t in [1e3, 1e4, 1e5, 123.456, 9.0] {
            let g = build_grid(GridParams::new(log_t, 1.0).with_cutoff(1.0)).unwrap();
            assert!((g.t(1) - 0.5 * log_t.ln()).abs() < 1e-12);
            for l in 2..=g.capital_l {
                assert_eq!(g.t(l) - g.t(l - 1), 1.0);
            }
        }
    }

    #[test]
    fn document_round_trip() {
        let g = desk();
        let doc = serde_json::to_value(g.to_document()).unwrap();
        assert_eq!(doc["capital_l"], 4);
        let back: GridDocument = serde_json::from_value(doc).unwrap();
        assert_eq!(back.betas, g.betas);
    }
}
