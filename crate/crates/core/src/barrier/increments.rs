//! The lattice of increment cells used to cover the barrier event.
//!
//! Cells are `[u_j, u_j + Δ_j⁻¹]` with `u_j ∈ Δ_j⁻¹ℤ`, and the admissible
//! tuples are those whose partial sums stay in `[L_j - 1, U_j]`. The cover
//! `{S_j ∈ [L_j, U_j], j ≤ ℓ} ⊂ ∪_𝓘 {Y_j ∈ cell_j}` needs
//! `Σ_j Δ_j⁻¹ ≤ 1`. Widths `Δ_j = c_j` satisfy this only asymptotically,
//! so the grid uses `Δ_j = M c_j` with the least integer mesh `M` that
//! makes the sum at most 1.

use serde::{Deserialize, Serialize};

use crate::grid::{BarrierSet, CheckpointGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementGrid {
    pub mesh: u32,
    /// `Δ_j`, `j = 1..=𝓛`.
    pub delta: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

/// Result of a cover query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cover {
    /// The trajectory leaves a barrier at some `j ≤ ℓ`.
    NotApplicable,
    /// Lattice indices `k_j` of a covering tuple, `u_j = k_j / Δ_j`.
    Covered(Vec<i64>),
    Uncovered,
}

impl IncrementGrid {
    pub fn new(grid: &CheckpointGrid, barriers: &BarrierSet) -> Self {
        let inv: f64 = grid.cls.iter().map(|c| 1.0 / c).sum();
        let mesh = inv.ceil().max(1.0) as u32;
        Self {
            mesh,
            delta: grid.cls.iter().map(|c| mesh as f64 * c).collect(),
            lower: barriers.lower.clone(),
            upper: barriers.upper.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.delta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delta.is_empty()
    }

    /// `Σ_j Δ_j⁻¹`
    pub fn inv_sum(&self) -> f64 {
        self.delta.iter().map(|d| 1.0 / d).sum()
    }

    /// `u_j` for lattice index `k` (1-based `j`).
    #[inline]
    pub fn u(&self, j: usize, k: i64) -> f64 {
        k as f64 / self.delta[j - 1]
    }

    #[inline]
    fn cell_contains(&self, j: usize, k: i64, y: f64) -> bool {
        self.u(j, k) <= y && y <= self.u(j, k + 1)
    }

    #[inline]
    fn partial_ok(&self, j: usize, sum: f64) -> bool {
        self.lower[j - 1] - 1.0 <= sum && sum <= self.upper[j - 1]
    }

    /// Membership of a lattice tuple in 𝓘.
    pub fn contains(&self, ks: &[i64]) -> bool {
        let mut sum = 0.0;
        ks.iter().enumerate().all(|(i, &k)| {
            sum += self.u(i + 1, k);
            self.partial_ok(i + 1, sum)
        })
    }

    /// Every tuple of 𝓘 of length `ell`, by depth-first enumeration of the
    /// partial-sum constraints.
    pub fn tuples(&self, ell: usize) -> Vec<Vec<i64>> {
        let mut out = Vec::new();
        let mut cur = Vec::with_capacity(ell);
        self.enumerate(ell, 0.0, &mut cur, &mut out);
        out
    }

    fn enumerate(&self, ell: usize, sum: f64, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        let j = cur.len() + 1;
        if j > ell {
            out.push(cur.clone());
            return;
        }
        let d = self.delta[j - 1];
        let lo = ((self.lower[j - 1] - 1.0 - sum) * d).floor() as i64 - 1;
        let hi = ((self.upper[j - 1] - sum) * d).ceil() as i64 + 1;
        for k in lo..=hi {
            let s = sum + self.u(j, k);
            if self.partial_ok(j, s) {
                cur.push(k);
                self.enumerate(ell, s, cur, out);
                cur.pop();
            }
        }
    }
}

/// Given `S_1..S_ℓ` (one abscissa), find a tuple of 𝓘 whose cells contain
/// the increments `Y_j = S_j - S_{j-1}`.
pub fn increment_grid_cover(partial_sums: &[f64], grid: &IncrementGrid, ell: usize) -> Cover {
    assert!(ell >= 1 && ell <= partial_sums.len() && ell <= grid.len());
    let inside = (1..=ell).all(|j| {
        let s = partial_sums[j - 1];
        grid.lower[j - 1] <= s && s <= grid.upper[j - 1]
    });
    if !inside {
        return Cover::NotApplicable;
    }
    let ys: Vec<f64> = (0..ell)
        .map(|i| partial_sums[i] - if i == 0 { 0.0 } else { partial_sums[i - 1] })
        .collect();
    // Cells holding each Y_j: the floor cell, plus a neighbour when Y_j sits
    // on a lattice point (checked with the same arithmetic as `u`).
    let cands: Vec<Vec<i64>> = ys
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let k0 = (y * grid.delta[i]).floor() as i64;
            (k0 - 1..=k0 + 1).filter(|&k| grid.cell_contains(i + 1, k, y)).collect()
        })
        .collect();
    let mut cur = Vec::with_capacity(ell);
    if search(grid, &cands, 0.0, &mut cur) {
        Cover::Covered(cur)
    } else {
        Cover::Uncovered
    }
}

fn search(grid: &IncrementGrid, cands: &[Vec<i64>], sum: f64, cur: &mut Vec<i64>) -> bool {
    let j = cur.len() + 1;
    if j > cands.len() {
        return true;
    }
    for &k in &cands[j - 1] {
        let s = sum + grid.u(j, k);
        if grid.partial_ok(j, s) {
            cur.push(k);
            if search(grid, cands, s, cur) {
                return true;
            }
            cur.pop();
        }
    }
    false
}

/// Brute-force counterpart of [`increment_grid_cover`]: scan all of 𝓘.
pub fn cover_by_enumeration(partial_sums: &[f64], grid: &IncrementGrid, ell: usize) -> bool {
    let ys: Vec<f64> = (0..ell)
        .map(|i| partial_sums[i] - if i == 0 { 0.0 } else { partial_sums[i - 1] })
        .collect();
    grid.tuples(ell)
        .iter()
        .any(|t| t.iter().enumerate().all(|(i, &k)| grid.cell_contains(i + 1, k, ys[i])))
}
