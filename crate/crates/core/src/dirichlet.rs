//! Smoothed prime partial sums `S_ℓ^{(j)}(t)` and the pointwise majorant
//! for `log|ζ|` conditional on RH.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, LabError, Result};
use crate::grid::CheckpointGrid;
use crate::numeric::KahanSum;
use crate::primes::PrimeTable;

/// λ used for the abscissae of all partial sums.
pub const PARTIAL_SUM_LAMBDA: f64 = 0.5;

const LOG_EPS: f64 = 1e-12;

/// `S_ℓ^{(j)}`: primes and prime squares up to `T_ℓ`, weighted by
/// `a_j(n) = 1 - log n / log T_j` at abscissa `σ_j`.
///
/// `log_tj = ∞` switches the smoothing off (`a_j ≡ 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirichletPolySpec {
    pub j: usize,
    pub ell: usize,
    pub sigma: f64,
    pub log_tj: f64,
    pub log_tell: f64,
}

impl DirichletPolySpec {
    pub fn new(j: usize, ell: usize, sigma: f64, log_tj: f64, log_tell: f64) -> Result<Self> {
        if !(0.5..=1.0).contains(&sigma) {
            return Err(invalid("sigma", format!("{sigma} outside [1/2, 1]")));
        }
        if j < ell {
            return Err(invalid("j", format!("abscissa index {j} below cutoff index {ell}")));
        }
        if !(log_tj > 0.0) || !(log_tell >= 0.0) || log_tell.is_infinite() {
            return Err(invalid("log_t", "scales must be positive and finite"));
        }
        Ok(Self {
            j,
            ell,
            sigma,
            log_tj,
            log_tell,
        })
    }

    /// The grid's `S_ℓ^{(j)}` with `σ_j = 1/2 + λ/log T_j`, λ = 1/2. `ell = 0`
    /// is the empty sum.
    pub fn from_grid(grid: &CheckpointGrid, j: usize, ell: usize) -> Result<Self> {
        if j == 0 || j > grid.capital_l || ell > j {
            return Err(invalid(
                "indices",
                format!("need 0 ≤ ell ≤ j ≤ {}, got ell={ell}, j={j}", grid.capital_l),
            ));
        }
        let log_tj = grid.log_t_at(j);
        Self::new(
            j,
            ell,
            0.5 + PARTIAL_SUM_LAMBDA / log_tj,
            log_tj,
            grid.log_t_at(ell),
        )
    }

    /// `a_j(n)` as a function of `log n`.
    #[inline]
    pub fn weight(&self, log_n: f64) -> f64 {
        if self.log_tj.is_infinite() {
            1.0
        } else {
            1.0 - log_n / self.log_tj
        }
    }

    pub fn with_cutoff(mut self, ell: usize, log_tell: f64) -> Self {
        self.ell = ell;
        self.log_tell = log_tell;
        self
    }
}

/// Coefficients of a partial sum (or of a band of it), laid out for fast
/// repeated evaluation. Linear terms cover table indices
/// `lin_start..lin_start + amp.len()`, square terms `sq_start..`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletCoeffs {
    pub lin_start: usize,
    pub lin_logp: Vec<f64>,
    /// `a(p) p^{-σ}`
    pub amp: Vec<f64>,
    pub sq_start: usize,
    pub sq_logp: Vec<f64>,
    /// `½ a(p²) p^{-2σ}`
    pub sq_amp: Vec<f64>,
}

impl DirichletCoeffs {
    pub fn new(spec: &DirichletPolySpec, table: &PrimeTable) -> Result<Self> {
        Self::band(spec, table, f64::NEG_INFINITY)
    }

    /// Only the terms with `log n ∈ (lo_log, log T_ℓ]`.
    pub fn band(spec: &DirichletPolySpec, table: &PrimeTable, lo_log: f64) -> Result<Self> {
        if !table.covers_log(spec.log_tell) {
            return Err(LabError::TableTooShort {
                needed_log: spec.log_tell,
                limit: table.limit,
            });
        }
        let hi = spec.log_tell + LOG_EPS;
        let lo = lo_log + LOG_EPS;
        let logs = |k: usize| (table.primes[k] as f64).ln();
        let lin_start = table.primes.partition_point(|&p| (p as f64).ln() <= lo);
        let lin_end = table.primes.partition_point(|&p| (p as f64).ln() <= hi);
        let sq_start = table.primes.partition_point(|&p| 2.0 * (p as f64).ln() <= lo);
        let sq_end = table.primes.partition_point(|&p| 2.0 * (p as f64).ln() <= hi);
        let lin_end = lin_end.max(lin_start);
        let sq_end = sq_end.max(sq_start);
        let lin_logp: Vec<f64> = (lin_start..lin_end).map(logs).collect();
        let amp = lin_logp
            .iter()
            .map(|&l| spec.weight(l) * (-spec.sigma * l).exp())
            .collect();
        let sq_logp: Vec<f64> = (sq_start..sq_end).map(logs).collect();
        let sq_amp = sq_logp
            .iter()
            .map(|&l| 0.5 * spec.weight(2.0 * l) * (-2.0 * spec.sigma * l).exp())
            .collect();
        Ok(Self {
            lin_start,
            lin_logp,
            amp,
            sq_start,
            sq_logp,
            sq_amp,
        })
    }

    pub fn lin_end(&self) -> usize {
        self.lin_start + self.amp.len()
    }

    pub fn sq_end(&self) -> usize {
        self.sq_start + self.sq_amp.len()
    }

    /// Value at height `t`.
    pub fn eval(&self, t: f64) -> f64 {
        let mut s = KahanSum::new();
        for (a, l) in self.amp.iter().zip(&self.lin_logp) {
            s.add(a * (t * l).cos());
        }
        for (a, l) in self.sq_amp.iter().zip(&self.sq_logp) {
            s.add(a * (2.0 * t * l).cos());
        }
        s.value()
    }

    /// Value when `cos(t log p)` and `cos(2t log p)` are replaced by the
    /// supplied per-prime values (indexed by table position).
    #[inline]
    pub fn eval_with(&self, lin: &[f64], sq: &[f64]) -> f64 {
        let a: f64 = self
            .amp
            .iter()
            .zip(&lin[self.lin_start..self.lin_end()])
            .map(|(a, x)| a * x)
            .sum();
        let b: f64 = self
            .sq_amp
            .iter()
            .zip(&sq[self.sq_start..self.sq_end()])
            .map(|(a, x)| a * x)
            .sum();
        a + b
    }
}

/// `S_ℓ^{(j)}(t)`.
pub fn partial_sum(spec: &DirichletPolySpec, table: &PrimeTable, t: f64) -> Result<f64> {
    Ok(DirichletCoeffs::new(spec, table)?.eval(t))
}

/// Bisection on (0, 1) for `e^{-λ} = λ + λ²/2`, then Newton polishing.
pub fn solve_lambda0() -> f64 {
    let f = |l: f64| (-l).exp() - l - 0.5 * l * l;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..4 {
        let d = -(-x).exp() - 1.0 - x;
        x -= f(x) / d;
    }
    x
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MajorantParams {
    pub log_x: f64,
    pub lambda: f64,
    pub log_t: f64,
}

impl MajorantParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.log_x >= 2f64.ln() - LOG_EPS && self.log_x <= 2.0 * self.log_t + LOG_EPS) {
            return Err(LabError::XOutOfRange {
                log_x: self.log_x,
                max: 2.0 * self.log_t,
            });
        }
        if self.lambda < solve_lambda0() - LOG_EPS {
            return Err(LabError::LambdaBelowThreshold(self.lambda));
        }
        Ok(())
    }

    pub fn sigma(&self) -> f64 {
        0.5 + self.lambda / self.log_x
    }

    /// `(1+λ)/2 · log T / log x`
    pub fn linear_term(&self) -> f64 {
        0.5 * (1.0 + self.lambda) * self.log_t / self.log_x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MajorantValue {
    pub value: f64,
    pub prime_part: f64,
    pub linear_term: f64,
    /// Mass of the dropped cubes and higher powers, bounded by
    /// `Σ_{p^m ≤ x, m ≥ 3} p^{-mσ}/m`.
    pub omitted_powers: f64,
}

/// Prepared majorant: the prime part is the partial sum with abscissa
/// `σ = 1/2 + λ/log x`, smoothing `log x` and cutoff `x`.
#[derive(Debug, Clone)]
pub struct SoundMajorant {
    pub params: MajorantParams,
    coeffs: DirichletCoeffs,
    omitted: f64,
}

impl SoundMajorant {
    pub fn new(params: MajorantParams, table: &PrimeTable) -> Result<Self> {
        params.validate()?;
        let sigma = params.sigma();
        let spec = DirichletPolySpec {
            j: 0,
            ell: 0,
            sigma,
            log_tj: params.log_x,
            log_tell: params.log_x,
        };
        let coeffs = DirichletCoeffs::new(&spec, table)?;
        let mut omitted = KahanSum::new();
        for &p in &table.primes {
            let lp = (p as f64).ln();
            if 3.0 * lp > params.log_x + LOG_EPS {
                break;
            }
            let mut m = 3.0;
            while m * lp <= params.log_x + LOG_EPS {
                omitted.add((-m * sigma * lp).exp() / m);
                m += 1.0;
            }
        }
        Ok(Self {
            params,
            coeffs,
            omitted: omitted.value(),
        })
    }

    pub fn eval(&self, t: f64) -> MajorantValue {
        let prime_part = self.coeffs.eval(t);
        let linear_term = self.params.linear_term();
        MajorantValue {
            value: prime_part + linear_term,
            prime_part,
            linear_term,
            omitted_powers: self.omitted,
        }
    }
}

pub fn sound_majorant(params: MajorantParams, table: &PrimeTable, t: f64) -> Result<MajorantValue> {
    Ok(SoundMajorant::new(params, table)?.eval(t))
}

/// Read a CSV whose first column is `t` (header row required) and write
/// `t` plus one column `S_<ell>^<j>` per spec.
pub fn evaluate_batch_csv<R: Read, W: Write>(
    input: R,
    output: W,
    specs: &[DirichletPolySpec],
    table: &PrimeTable,
) -> Result<usize> {
    let coeffs = specs
        .iter()
        .map(|s| DirichletCoeffs::new(s, table))
        .collect::<Result<Vec<_>>>()?;
    let csv_err = |e: csv::Error| invalid("csv", e.to_string());
    let mut rdr = csv::Reader::from_reader(input);
    let mut ts = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let field = rec.get(0).unwrap_or("").trim();
        let t: f64 = field
            .parse()
            .map_err(|_| invalid("csv", format!("bad t value {field:?}")))?;
        ts.push(t);
    }
    let rows: Vec<Vec<f64>> = ts
        .par_iter()
        .map(|&t| coeffs.iter().map(|c| c.eval(t)).collect())
        .collect();
    let mut wtr = csv::Writer::from_writer(output);
    let mut header = vec!["t".to_string()];
    header.extend(specs.iter().map(|s| format!("S_{}^{}", s.ell, s.j)));
    wtr.write_record(&header).map_err(csv_err)?;
    for (t, row) in ts.iter().zip(&rows) {
        let mut rec = vec![format!("{t:.17e}")];
        rec.extend(row.iter().map(|v| format!("{v:.17e}")));
        wtr.write_record(&rec).map_err(csv_err)?;
    }
    wtr.flush().map_err(|e| invalid("csv", e.to_string()))?;
    Ok(ts.len())
}
