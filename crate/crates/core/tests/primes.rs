use critline::primes::{mertens_log_sum, sieve_primes, weighted_prime_sum, PrimeSumForm, PrimeTable};
use proptest::prelude::*;

fn is_prime(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

/// Sieve of Eratosthenes over a bit-per-odd array, independent of the
/// segmented library sieve.
fn odd_sieve(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = ((limit - 1) / 2) as usize; // odd numbers 3, 5, ..., ≤ limit
    let mut comp = vec![false; n + 1];
    let mut out = vec![2];
    for i in 1..=n {
        if !comp[i] {
            let p = 2 * i as u64 + 1;
            out.push(p);
            let mut j = (p * p - 1) / 2;
            while j <= n as u64 {
                comp[j as usize] = true;
                j += p;
            }
        }
    }
    out
}

#[test]
fn limit_ten() {
    let t = sieve_primes(10).unwrap();
    assert_eq!(t.primes, vec![2, 3, 5, 7]);
    assert_eq!(t.prime_squares, vec![4, 9]);
}

#[test]
fn trial_division_count_at_ten_thousand() {
    let t = sieve_primes(10_000).unwrap();
    assert_eq!(t.len(), (0..=10_000).filter(|&n| is_prime(n)).count());
    assert_eq!(t.len(), 1229);
}

#[test]
fn second_sieve_agrees_at_one_million() {
    let t = sieve_primes(1_000_000).unwrap();
    assert_eq!(t.primes, odd_sieve(1_000_000));
}

#[test]
fn four_prime_inverse_root_sum() {
    let t = sieve_primes(10).unwrap();
    let s = weighted_prime_sum(&t, &PrimeSumForm::new(0.5, 1)).unwrap();
    let direct: f64 = [2f64, 3., 5., 7.].iter().map(|p| p.powf(-0.5)).sum();
    assert!((s.value - direct).abs() < 1e-14);
    // The reference figure sums four rounded terms; the true value is 2.10963.
    assert!((s.value - 2.1097).abs() < 1e-4);
}

#[test]
fn empty_ranges() {
    let t = sieve_primes(1).unwrap_or_else(|_| PrimeTable::empty(1));
    assert!(t.is_empty());
    let s = weighted_prime_sum(&t, &PrimeSumForm::new(0.5, 1)).unwrap();
    assert_eq!((s.value, s.terms), (0.0, 0));
    let big = sieve_primes(100).unwrap();
    assert_eq!(mertens_log_sum(&big, 1.5).unwrap().value, 0.0);
}

#[test]
fn log_sum_at_ten() {
    let t = sieve_primes(10).unwrap();
    let s = mertens_log_sum(&t, 10.0).unwrap().value;
    let direct: f64 = [2f64, 3., 5., 7.].iter().map(|p| p.ln() / p).sum();
    assert!((s - direct).abs() < 1e-14);
    assert!((s - 1.3127).abs() < 5e-5);
}

#[test]
fn mertens_convergence() {
    let t = sieve_primes(1_000_000).unwrap();
    const M: f64 = 0.261_497_212_847_642_8;
    let mut prev = f64::INFINITY;
    for e in 3..=6 {
        let x = 10f64.powi(e);
        let s: f64 = t.primes.iter().take_while(|&&p| p as f64 <= x).map(|&p| 1.0 / p as f64).sum();
        let dev = (s - x.ln().ln() - M).abs();
        assert!(dev < prev, "not monotone at 10^{e}");
        prev = dev;
    }
    assert!(prev < 0.05);
    let r = mertens_log_sum(&t, 1e6).unwrap().value / 1e6f64.ln();
    assert!((0.9..=1.01).contains(&r), "{r}");
}

#[test]
fn cache_round_trip() {
    let t = sieve_primes(5000).unwrap();
    let mut buf = Vec::new();
    t.write_cache(&mut buf).unwrap();
    let back = PrimeTable::read_cache(buf.as_slice()).unwrap();
    assert_eq!(back.primes, t.primes);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn sieve_matches_trial_division(limit in 0u64..20_000) {
        let t = sieve_primes(limit).unwrap_or_else(|_| PrimeTable::empty(limit));
        let expected: Vec<u64> = (0..=limit).filter(|&n| is_prime(n)).collect();
        prop_assert_eq!(&t.primes, &expected);
        let squares: Vec<u64> = expected.iter().map(|p| p * p).filter(|&s| s <= limit).collect();
        prop_assert_eq!(&t.prime_squares, &squares);
    }
}
