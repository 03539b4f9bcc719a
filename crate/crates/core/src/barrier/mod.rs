//! Barrier events of the recursive scheme, evaluated on trajectories
//! `S_ℓ^{(j)}` (`1 ≤ ℓ ≤ j ≤ 𝓛`) drawn either from `ζ` at random heights
//! or from the random models.
//!
//! For model trajectories the event `H = {log|ζ| > V}` is taken on the
//! truncated random Euler product `Σ_{p ≤ x} Re X(p)/√p + ½ Σ_{p² ≤ x}
//! Re X(p)²/p`, sharing its phases with the trajectory.

pub mod increments;
pub mod profiles;
pub mod torus;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dirichlet::{DirichletCoeffs, DirichletPolySpec};
use crate::error::{invalid, Result};
use crate::grid::{barrier_bounds, BarrierSet, CheckpointGrid};
use crate::models::ModelSampler;
use crate::primes::PrimeTable;
use crate::zeta::zeta_half_line;

pub use increments::{cover_by_enumeration, increment_grid_cover, Cover, IncrementGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleSource {
    ZetaTau,
    Steinhaus,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Provenance {
    Height(f64),
    Trial { seed: u64, trial: u64 },
    Manual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub source: SampleSource,
    /// `values[ℓ-1][j-ℓ] = S_ℓ^{(j)}`
    pub values: Vec<Vec<f64>>,
    pub log_zeta: Option<f64>,
    pub provenance: Provenance,
}

impl TrajectorySample {
    /// A sample with `S_ℓ^{(j)} = f(ℓ, j)`.
    pub fn from_fn(capital_l: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        Self {
            source: SampleSource::Steinhaus,
            values: (1..=capital_l)
                .map(|l| (l..=capital_l).map(|j| f(l, j)).collect())
                .collect(),
            log_zeta: None,
            provenance: Provenance::Manual,
        }
    }

    pub fn levels(&self) -> usize {
        self.values.len()
    }

    /// `S_ℓ^{(j)}`, with `S_0^{(j)} = 0`.
    #[inline]
    pub fn get(&self, ell: usize, j: usize) -> f64 {
        if ell == 0 {
            0.0
        } else {
            self.values[ell - 1][j - ell]
        }
    }

    /// `S_1^{(J)}, …, S_J^{(J)}`
    pub fn column(&self, big_j: usize) -> Vec<f64> {
        (1..=big_j).map(|l| self.get(l, big_j)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventFlags {
    pub in_h: Option<bool>,
    /// `G_1..G_𝓛`
    pub in_g: Vec<bool>,
    pub in_a: Vec<bool>,
    /// `S_ℓ^{(j)} ∈ [L′_ℓ, U′_ℓ]` for all `j ≥ ℓ`.
    pub in_primed: Vec<bool>,
    /// Some `S_ℓ^{(j)} > U_ℓ`.
    pub upper_breach: Vec<bool>,
    /// Some `S_ℓ^{(j)} < L_ℓ`.
    pub lower_breach: Vec<bool>,
    pub first_exit: Option<usize>,
}

impl EventFlags {
    /// `G_ℓ`, with `G_0` everything.
    pub fn g(&self, ell: usize) -> bool {
        ell == 0 || self.in_g[ell - 1]
    }

    /// Levels where `G_{ℓ-1} ∩ A_ℓ` holds but the primed containment fails.
    pub fn implication_failures(&self) -> usize {
        (1..=self.in_g.len())
            .filter(|&l| self.g(l - 1) && self.in_a[l - 1] && !self.in_primed[l - 1])
            .count()
    }
}

pub fn evaluate_events(sample: &TrajectorySample, barriers: &BarrierSet, v: f64) -> EventFlags {
    let n = sample.levels();
    assert_eq!(n, barriers.len(), "sample and barriers disagree on 𝓛");
    let mut f = EventFlags {
        in_h: sample.log_zeta.map(|z| z > v),
        in_g: Vec::with_capacity(n),
        in_a: Vec::with_capacity(n),
        in_primed: Vec::with_capacity(n),
        upper_breach: Vec::with_capacity(n),
        lower_breach: Vec::with_capacity(n),
        first_exit: None,
    };
    let mut g_prev = true;
    for l in 1..=n {
        let (lo, hi) = barriers.band(l);
        let (plo, phi) = barriers.primed_band(l);
        let row = &sample.values[l - 1];
        let up = row.iter().any(|&s| s > hi);
        let down = row.iter().any(|&s| s < lo);
        let g = g_prev && !up && !down;
        let c = 0.5 * (hi - lo);
        let a = (l..=n).all(|j| (sample.get(l, j) - sample.get(l - 1, j)).abs() <= 2.0 * c);
        f.in_primed.push(row.iter().all(|&s| plo <= s && s <= phi));
        f.in_a.push(a);
        f.upper_breach.push(up);
        f.lower_breach.push(down);
        f.in_g.push(g);
        if g_prev && !g {
            f.first_exit = Some(l);
        }
        g_prev = g;
    }
    f
}

/// The arithmetic condition under which `G_{ℓ-1} ∩ A_ℓ` forces the primed
/// containment: `κ t_1 ≤ 2c_1` and, for `ℓ ≥ 2`, `|κ| ≤ 2c_ℓ - c_{ℓ-1}`.
pub fn primed_implication_condition(grid: &CheckpointGrid) -> Vec<bool> {
    (1..=grid.capital_l)
        .map(|l| {
            if l == 1 {
                (grid.kappa * grid.t(1)).abs() <= 2.0 * grid.c(1)
            } else {
                grid.kappa.abs() <= 2.0 * grid.c(l) - grid.c(l - 1)
            }
        })
        .collect()
}

/// Counts for `P(H) = Σ_{ℓ=1}^{𝓛+1} P(H ∩ G_{ℓ-1} \ G_ℓ)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionReport {
    pub samples: u64,
    pub n_h: u64,
    /// `counts[ℓ-1] = N(H ∩ G_{ℓ-1} \ G_ℓ)`, `ℓ = 1..=𝓛+1`.
    pub counts: Vec<u64>,
    /// `N(H ∩ G_{ℓ-1} ∩ {some S_ℓ^{(j)} > U_ℓ})`, `ℓ = 1..=𝓛`.
    pub upper_split: Vec<u64>,
    /// `N(H ∩ G_{ℓ-1} ∩ {some S_ℓ^{(j)} < L_ℓ})`
    pub lower_split: Vec<u64>,
}

impl PartitionReport {
    pub fn new(capital_l: usize) -> Self {
        Self {
            samples: 0,
            n_h: 0,
            counts: vec![0; capital_l + 1],
            upper_split: vec![0; capital_l],
            lower_split: vec![0; capital_l],
        }
    }

    /// Samples without a `log ζ` value count as members of `H`.
    pub fn add(&mut self, f: &EventFlags) {
        self.samples += 1;
        if !f.in_h.unwrap_or(true) {
            return;
        }
        self.n_h += 1;
        let n = f.in_g.len();
        self.counts[f.first_exit.unwrap_or(n + 1) - 1] += 1;
        for l in 1..=n {
            if f.g(l - 1) {
                self.upper_split[l - 1] += f.upper_breach[l - 1] as u64;
                self.lower_split[l - 1] += f.lower_breach[l - 1] as u64;
            }
        }
    }

    pub fn merge(&mut self, o: &Self) {
        self.samples += o.samples;
        self.n_h += o.n_h;
        for (a, b) in self.counts.iter_mut().zip(&o.counts) {
            *a += b;
        }
        for (a, b) in self.upper_split.iter_mut().zip(&o.upper_split) {
            *a += b;
        }
        for (a, b) in self.lower_split.iter_mut().zip(&o.lower_split) {
            *a += b;
        }
    }

    pub fn partition_exact(&self) -> bool {
        self.counts.iter().sum::<u64>() == self.n_h
    }

    /// Upper plus lower breaches dominate each exit count.
    pub fn split_covers(&self) -> bool {
        (0..self.upper_split.len()).all(|i| self.upper_split[i] + self.lower_split[i] >= self.counts[i])
    }
}

pub fn partition_check(flags: &[EventFlags], capital_l: usize) -> Result<PartitionReport> {
    if flags.is_empty() {
        return Err(invalid("samples", "empty batch"));
    }
    let mut r = PartitionReport::new(capital_l);
    for f in flags {
        r.add(f);
    }
    Ok(r)
}

/// Coefficients of every `S_ℓ^{(j)}` on a grid, plus the `log ζ` proxy.
#[derive(Debug, Clone)]
pub struct TrajectoryModel {
    pub grid: CheckpointGrid,
    pub barriers: BarrierSet,
    sums: Vec<Vec<DirichletCoeffs>>,
    proxy: DirichletCoeffs,
    pub proxy_log_x: f64,
    n_lin: usize,
    n_sq: usize,
}

impl TrajectoryModel {
    /// `proxy_log_x` is `log x` of the Euler-product proxy for `log|ζ|`.
    pub fn new(grid: &CheckpointGrid, table: &PrimeTable, proxy_log_x: f64) -> Result<Self> {
        let n = grid.capital_l;
        let sums = (1..=n)
            .map(|l| {
                (l..=n)
                    .map(|j| DirichletCoeffs::new(&DirichletPolySpec::from_grid(grid, j, l)?, table))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let proxy = DirichletCoeffs::new(
            &DirichletPolySpec::new(0, 0, 0.5, f64::INFINITY, proxy_log_x)?,
            table,
        )?;
        let n_lin = sums.iter().flatten().chain([&proxy]).map(|c| c.lin_end()).max().unwrap_or(0);
        let n_sq = sums.iter().flatten().chain([&proxy]).map(|c| c.sq_end()).max().unwrap_or(0);
        Ok(Self {
            grid: grid.clone(),
            barriers: barrier_bounds(grid),
            sums,
            proxy,
            proxy_log_x,
            n_lin,
            n_sq,
        })
    }

    pub fn coeffs(&self, ell: usize, j: usize) -> &DirichletCoeffs {
        &self.sums[ell - 1][j - ell]
    }

    /// Number of leading table primes a model draw must cover.
    pub fn draw_sizes(&self) -> (usize, usize) {
        (self.n_lin, self.n_sq)
    }

    fn values_with(&self, lin: &[f64], sq: &[f64]) -> Vec<Vec<f64>> {
        self.sums
            .iter()
            .map(|row| row.iter().map(|c| c.eval_with(lin, sq)).collect())
            .collect()
    }

    pub fn zeta_sample(&self, tau: f64) -> Result<TrajectorySample> {
        Ok(TrajectorySample {
            source: SampleSource::ZetaTau,
            values: self.sums.iter().map(|row| row.iter().map(|c| c.eval(tau)).collect()).collect(),
            log_zeta: Some(zeta_half_line(tau)?.log_abs),
            provenance: Provenance::Height(tau),
        })
    }

    pub fn model_sample(&self, sampler: &ModelSampler, trial: u64) -> TrajectorySample {
        let mut lin = vec![0.0; self.n_lin];
        let mut sq = vec![0.0; self.n_sq.max(1)];
        sampler.fill(trial, &mut lin, &mut sq, self.n_sq);
        self.sample_from(sampler, trial, &lin, &sq)
    }

    fn sample_from(&self, sampler: &ModelSampler, trial: u64, lin: &[f64], sq: &[f64]) -> TrajectorySample {
        TrajectorySample {
            source: match sampler.model {
                crate::models::ModelKind::Steinhaus => SampleSource::Steinhaus,
                crate::models::ModelKind::Gaussian => SampleSource::Gaussian,
            },
            values: self.values_with(lin, sq),
            log_zeta: Some(self.proxy.eval_with(lin, sq)),
            provenance: Provenance::Trial {
                seed: sampler.seed,
                trial,
            },
        }
    }

    /// `f` applied to trajectories `0..trials`, in trial order.
    pub fn map_samples<T, F>(&self, sampler: &ModelSampler, trials: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&TrajectorySample) -> T + Sync,
    {
        sampler.map_trials(trials, self.n_lin, self.n_sq, |trial, lin, sq| {
            f(&self.sample_from(sampler, trial, lin, sq))
        })
    }
}

/// Exact-identity audit over a batch: partition counts, primed
/// implication and increment cover for every `ℓ ≤ J ≤ 𝓛`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventAudit {
    pub partition: PartitionReport,
    pub implication_failures: u64,
    pub cover_checks: u64,
    pub cover_not_applicable: u64,
    pub cover_failures: u64,
}

impl EventAudit {
    fn new(capital_l: usize) -> Self {
        Self {
            partition: PartitionReport::new(capital_l),
            implication_failures: 0,
            cover_checks: 0,
            cover_not_applicable: 0,
            cover_failures: 0,
        }
    }

    fn add(&mut self, s: &TrajectorySample, f: &EventFlags, inc: &IncrementGrid) {
        self.partition.add(f);
        self.implication_failures += f.implication_failures() as u64;
        let n = s.levels();
        for big_j in 1..=n {
            let col = s.column(big_j);
            for ell in 1..=big_j {
                self.cover_checks += 1;
                match increment_grid_cover(&col, inc, ell) {
                    Cover::NotApplicable => self.cover_not_applicable += 1,
                    Cover::Covered(_) => {}
                    Cover::Uncovered => self.cover_failures += 1,
                }
            }
        }
    }

    fn merge(&mut self, o: &Self) {
        self.partition.merge(&o.partition);
        self.implication_failures += o.implication_failures;
        self.cover_checks += o.cover_checks;
        self.cover_not_applicable += o.cover_not_applicable;
        self.cover_failures += o.cover_failures;
    }

    pub fn clean(&self) -> bool {
        self.partition.partition_exact()
            && self.partition.split_covers()
            && self.implication_failures == 0
            && self.cover_failures == 0
    }
}

const AUDIT_CHUNK: u64 = 1 << 12;

pub fn audit_model_batch(model: &TrajectoryModel, sampler: &ModelSampler, trials: u64, v: f64) -> EventAudit {
    let inc = IncrementGrid::new(&model.grid, &model.barriers);
    let n = model.grid.capital_l;
    let (n_lin, n_sq) = model.draw_sizes();
    let chunks = trials.div_ceil(AUDIT_CHUNK);
    let parts: Vec<EventAudit> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut audit = EventAudit::new(n);
            let mut lin = vec![0.0; n_lin];
            let mut sq = vec![0.0; n_sq.max(1)];
            for trial in c * AUDIT_CHUNK..((c + 1) * AUDIT_CHUNK).min(trials) {
                sampler.fill(trial, &mut lin, &mut sq, n_sq);
                let s = model.sample_from(sampler, trial, &lin, &sq);
                let f = evaluate_events(&s, &model.barriers, v);
                audit.add(&s, &f, &inc);
            }
            audit
        })
        .collect();
    let mut total = EventAudit::new(n);
    for p in &parts {
        total.merge(p);
    }
    total
}

pub fn audit_samples(samples: &[TrajectorySample], barriers: &BarrierSet, inc: &IncrementGrid, v: f64) -> EventAudit {
    let mut audit = EventAudit::new(barriers.len());
    for s in samples {
        let f = evaluate_events(s, barriers, v);
        audit.add(s, &f, inc);
    }
    audit
}

/// The small grid used for the barrier Monte Carlo: `log T = 9`, `θ = 1`,
/// `k = 1/2`, so `𝓛 = 2` and `T_2 ≈ 3480`.
pub fn desk_grid() -> Result<CheckpointGrid> {
    crate::grid::build_grid(crate::grid::GridParams::new(9.0, 0.5).with_cutoff(1.0))
}
