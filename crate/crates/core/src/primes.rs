//! Prime tables and the weighted prime sums behind the variance,
//! covariance and Mertens estimates.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::numeric::KahanSum;

const MAX_LIMIT: u64 = 1 << 32;
const SEGMENT: usize = 1 << 18;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeTable {
    pub limit: u64,
    pub primes: Vec<u64>,
    /// Squares of the primes `≤ √limit`.
    pub prime_squares: Vec<u64>,
}

/// All primes `≤ limit` by a segmented sieve of Eratosthenes; memory is
/// `O(√limit + segment)` beyond the output.
pub fn sieve_primes(limit: u64) -> Result<PrimeTable> {
    if limit < 2 {
        return Err(LabError::LimitTooSmall(limit));
    }
    if limit > MAX_LIMIT {
        return Err(LabError::LimitTooLarge(limit));
    }
    let root = isqrt(limit);
    let base = simple_sieve(root);
    let mut primes: Vec<u64> = base.clone();
    let mut seg = vec![true; SEGMENT];
    let mut lo = root + 1;
    while lo <= limit {
        let hi = (lo + SEGMENT as u64 - 1).min(limit);
        let len = (hi - lo + 1) as usize;
        seg[..len].fill(true);
        for &p in &base {
            if p * p > hi {
                break;
            }
            let mut m = (p * p).max(lo.div_ceil(p) * p);
            while m <= hi {
                seg[(m - lo) as usize] = false;
                m += p;
            }
        }
        primes.extend(
            seg[..len]
                .iter()
                .enumerate()
                .filter(|(_, &is)| is)
                .map(|(i, _)| lo + i as u64),
        );
        lo = hi + 1;
    }
    Ok(PrimeTable::from_primes(limit, primes))
}

fn simple_sieve(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut is = vec![true; n + 1];
    is[0] = false;
    is[1] = false;
    let mut i = 2;
    while i * i <= n {
        if is[i] {
            let mut m = i * i;
            while m <= n {
                is[m] = false;
                m += i;
            }
        }
        i += 1;
    }
    is.iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(i, _)| i as u64)
        .collect()
}

pub(crate) fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

impl PrimeTable {
    fn from_primes(limit: u64, primes: Vec<u64>) -> Self {
        let prime_squares = primes
            .iter()
            .take_while(|&&p| p * p <= limit)
            .map(|&p| p * p)
            .collect();
        Self {
            limit,
            primes,
            prime_squares,
        }
    }

    /// The empty table for `limit < 2` ranges; sums over it are zero.
    pub fn empty(limit: u64) -> Self {
        Self {
            limit,
            primes: Vec::new(),
            prime_squares: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    /// Whether every prime `≤ e^{log_x}` is in the table.
    pub fn covers_log(&self, log_x: f64) -> bool {
        log_x <= (self.limit as f64).ln() + 1e-12
    }

    /// Number of primes `p` with `log p ≤ log_x`.
    pub fn count_upto_log(&self, log_x: f64) -> usize {
        self.primes.partition_point(|&p| (p as f64).ln() <= log_x)
    }

    /// Number of primes `≤ x`.
    pub fn count_upto(&self, x: f64) -> usize {
        self.primes.partition_point(|&p| (p as f64) <= x)
    }

    /// Write the binary cache: magic, limit and count (little-endian u64),
    /// then LEB128 varint gaps between consecutive primes starting from 0.
    pub fn write_cache<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(CACHE_MAGIC)?;
        w.write_all(&self.limit.to_le_bytes())?;
        w.write_all(&(self.primes.len() as u64).to_le_bytes())?;
        let mut prev = 0u64;
        let mut buf = Vec::with_capacity(self.primes.len() * 2);
        for &p in &self.primes {
            write_varint(&mut buf, p - prev);
            prev = p;
        }
        w.write_all(&buf)
    }

    pub fn read_cache<R: Read>(mut r: R) -> Result<Self> {
        let io = |e: std::io::Error| LabError::Cache(e.to_string());
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(io)?;
        if &magic != CACHE_MAGIC {
            return Err(LabError::Cache("bad magic".into()));
        }
        let mut word = [0u8; 8];
        r.read_exact(&mut word).map_err(io)?;
        let limit = u64::from_le_bytes(word);
        r.read_exact(&mut word).map_err(io)?;
        let count = u64::from_le_bytes(word) as usize;
        let mut body = Vec::new();
        r.read_to_end(&mut body).map_err(io)?;
        let mut primes = Vec::with_capacity(count);
        let mut pos = 0;
        let mut prev = 0u64;
        while pos < body.len() {
            let (gap, used) = read_varint(&body[pos..])
                .ok_or_else(|| LabError::Cache("truncated varint".into()))?;
            pos += used;
            prev += gap;
            primes.push(prev);
        }
        if primes.len() != count {
            return Err(LabError::Cache(format!(
                "header count {count} but {} primes decoded",
                primes.len()
            )));
        }
        if primes.last().is_some_and(|&p| p > limit) {
            return Err(LabError::Cache("prime beyond header limit".into()));
        }
        Ok(Self::from_primes(limit, primes))
    }
}

const CACHE_MAGIC: &[u8; 8] = b"CRITPRM1";

fn write_varint(buf: &mut Vec<u8>, mut v: u64) {
    loop {
        let byte = (v & 0x7f) as u8;
        v >>= 7;
        if v == 0 {
            buf.push(byte);
            return;
        }
        buf.push(byte | 0x80);
    }
}

fn read_varint(bytes: &[u8]) -> Option<(u64, usize)> {
    let mut v = 0u64;
    for (i, &b) in bytes.iter().enumerate().take(10) {
        v |= ((b & 0x7f) as u64) << (7 * i);
        if b & 0x80 == 0 {
            return Some((v, i + 1));
        }
    }
    None
}

/// Which integers the sum runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Support {
    Primes,
    /// `n = p²`, weighted with `(1 - log n / L)` and `n^{-cσ}`.
    PrimeSquares,
}

/// The summand `w(n)^e / n^{cσ}` with `w(n) = 1 - log n / L` (or 1 when
/// unsmoothed).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrimeSumForm {
    pub sigma: f64,
    pub smoothing_log_x: Option<f64>,
    /// Square the smoothing weight (e = 2) instead of e = 1.
    pub squared: bool,
    /// c ∈ {1, 2, 4}.
    pub power: u32,
    pub support: Support,
}

impl PrimeSumForm {
    pub fn new(sigma: f64, power: u32) -> Self {
        Self {
            sigma,
            smoothing_log_x: None,
            squared: false,
            power,
            support: Support::Primes,
        }
    }

    pub fn smoothed(mut self, log_x: f64) -> Self {
        self.smoothing_log_x = Some(log_x);
        self
    }

    pub fn squared(mut self) -> Self {
        self.squared = true;
        self
    }

    pub fn over(mut self, support: Support) -> Self {
        self.support = support;
        self
    }

    fn descriptor(&self) -> String {
        let n = match self.support {
            Support::Primes => "p",
            Support::PrimeSquares => "p^2",
        };
        let w = match (self.smoothing_log_x, self.squared) {
            (None, _) => "1".to_string(),
            (Some(_), false) => format!("(1-log {n}/L)"),
            (Some(_), true) => format!("(1-log {n}/L)^2"),
        };
        format!("{w}/{n}^({}*{})", self.power, self.sigma)
    }

    #[inline]
    fn term(&self, p: u64) -> f64 {
        let logp = (p as f64).ln();
        let (log_n, n_power) = match self.support {
            Support::Primes => (logp, self.power as f64),
            Support::PrimeSquares => (2.0 * logp, 2.0 * self.power as f64),
        };
        let base = (-n_power * self.sigma * logp).exp();
        match self.smoothing_log_x {
            None => base,
            Some(l) => {
                let w = 1.0 - log_n / l;
                if self.squared {
                    w * w * base
                } else {
                    w * base
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedSum {
    pub value: f64,
    pub terms: usize,
    pub weight_descriptor: String,
}

/// `Σ w(n)^e / n^{cσ}` over the whole table.
pub fn weighted_prime_sum(table: &PrimeTable, form: &PrimeSumForm) -> Result<WeightedSum> {
    weighted_prime_sum_between(table, form, 0.0, table.limit as f64)
}

/// Same sum restricted to `lo < n ≤ hi` (n = p or p² per the support).
pub fn weighted_prime_sum_between(
    table: &PrimeTable,
    form: &PrimeSumForm,
    lo: f64,
    hi: f64,
) -> Result<WeightedSum> {
    if let Some(l) = form.smoothing_log_x {
        let range = (hi.min(table.limit as f64)).max(1.0).ln();
        if l < range - 1e-12 {
            return Err(LabError::SmoothingShorterThanRange {
                smoothing: l,
                range,
            });
        }
    }
    let selected: &[u64] = match form.support {
        Support::Primes => {
            let a = table.primes.partition_point(|&p| (p as f64) <= lo);
            let b = table.primes.partition_point(|&p| (p as f64) <= hi);
            &table.primes[a..b.max(a)]
        }
        Support::PrimeSquares => {
            let a = table.primes.partition_point(|&p| ((p * p) as f64) <= lo);
            let b = table
                .primes
                .partition_point(|&p| p.checked_mul(p).is_some_and(|q| (q as f64) <= hi));
            &table.primes[a..b.max(a)]
        }
    };
    let value = ordered_parallel_sum(selected, |p| form.term(p));
    Ok(WeightedSum {
        value,
        terms: selected.len(),
        weight_descriptor: form.descriptor(),
    })
}

/// Compensated sum over fixed-size chunks, reduced in chunk order so the
/// result does not depend on the thread count.
pub(crate) fn ordered_parallel_sum<F>(items: &[u64], f: F) -> f64
where
    F: Fn(u64) -> f64 + Sync,
{
    const CHUNK: usize = 1 << 14;
    let partials: Vec<f64> = items
        .par_chunks(CHUNK)
        .map(|c| c.iter().map(|&p| f(p)).collect::<KahanSum>().value())
        .collect();
    partials.into_iter().collect::<KahanSum>().value()
}

/// `Σ_{p ≤ x} log p / p`.
pub fn mertens_log_sum(table: &PrimeTable, x: f64) -> Result<WeightedSum> {
    if x > table.limit as f64 + 0.5 {
        return Err(LabError::TableTooShort {
            needed_log: x.ln(),
            limit: table.limit,
        });
    }
    let n = table.count_upto(x);
    let slice = &table.primes[..n];
    Ok(WeightedSum {
        value: ordered_parallel_sum(slice, |p| (p as f64).ln() / p as f64),
        terms: n,
        weight_descriptor: "log p/p".into(),
    })
}

/// `Σ_{p ≤ x} 1/p - log log x`, which tends to the Meissel–Mertens constant.
pub fn mertens_second_deviation(table: &PrimeTable, x: f64) -> f64 {
    let n = table.count_upto(x);
    ordered_parallel_sum(&table.primes[..n], |p| 1.0 / p as f64) - x.ln().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial_division_count(n: u64) -> usize {
        (2..=n)
            .filter(|&m| (2..).take_while(|d| d * d <= m).all(|d| m % d != 0))
            .count()
    }

    #[test]
    fn small_table() {
        let t = sieve_primes(10).unwrap();
        assert_eq!(t.primes, vec![2, 3, 5, 7]);
        assert_eq!(t.prime_squares, vec![4, 9]);
        assert_eq!(sieve_primes(2).unwrap().primes, vec![2]);
        assert!(matches!(sieve_primes(1), Err(LabError::LimitTooSmall(1))));
        assert!(sieve_primes(MAX_LIMIT + 1).is_err());
    }

    #[test]
    fn count_at_ten_thousand() {
        let t = sieve_primes(10_000).unwrap();
        assert_eq!(t.len(), trial_division_count(10_000));
        assert_eq!(t.len(), 1229);
    }

    #[test]
    fn segment_boundaries() {
        // Limits straddling a segment edge above √limit.
        for limit in [SEGMENT as u64 + 500, 3 * SEGMENT as u64 + 7] {
            let t = sieve_primes(limit).unwrap();
            let simple = simple_sieve(limit);
            assert_eq!(t.primes, simple);
        }
    }

    #[test]
    fn four_term_sums() {
        let t = sieve_primes(10).unwrap();
        let s = weighted_prime_sum(&t, &PrimeSumForm::new(0.5, 1)).unwrap();
        assert_eq!(s.terms, 4);
        assert!((s.value - 2.1097).abs() < 1e-4);
        let m = mertens_log_sum(&t, 10.0).unwrap();
        assert!((m.value - 1.3127).abs() < 1e-4);
        assert_eq!(mertens_log_sum(&t, 1.5).unwrap().value, 0.0);
        let e = PrimeTable::empty(1);
        let s = weighted_prime_sum(&e, &PrimeSumForm::new(0.5, 1)).unwrap();
        assert_eq!((s.value, s.terms), (0.0, 0));
    }

    #[test]
    fn smoothing_must_cover_range() {
        let t = sieve_primes(1000).unwrap();
        let f = PrimeSumForm::new(0.5, 2).smoothed(3.0);
        assert!(matches!(
            weighted_prime_sum(&t, &f),
            Err(LabError::SmoothingShorterThanRange { .. })
        ));
        assert!(weighted_prime_sum(&t, &PrimeSumForm::new(0.5, 2).smoothed(7.0)).is_ok());
    }

    #[test]
    fn square_support_counts() {
        let t = sieve_primes(100).unwrap();
        let s = weighted_prime_sum(&t, &PrimeSumForm::new(0.5, 1).over(Support::PrimeSquares)).unwrap();
        assert_eq!(s.terms, 4); // 4, 9, 25, 49
        let expect = 0.5 + 1.0 / 3.0 + 0.2 + 1.0 / 7.0;
        assert!((s.value - expect).abs() < 1e-14);
    }

    #[test]
    fn cache_round_trip_and_corruption() {
        let t = sieve_primes(100_000).unwrap();
        let mut buf = Vec::new();
        t.write_cache(&mut buf).unwrap();
        // varints keep the file far below 8 bytes per prime
        assert!(buf.len() < 24 + 2 * t.len());
        let back = PrimeTable::read_cache(&buf[..]).unwrap();
        assert_eq!(back, t);
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(PrimeTable::read_cache(&bad[..]).is_err());
        let truncated = &buf[..buf.len() - 3];
        assert!(PrimeTable::read_cache(truncated).is_err());
    }

    #[test]
    fn isqrt_exact() {
        for n in [0u64, 1, 3, 4, 15, 16, 17, (1 << 32) - 1, 1 << 32, u32::MAX as u64 * 3] {
            let r = isqrt(n);
            assert!(r * r <= n && (r + 1) * (r + 1) > n);
        }
    }
}
