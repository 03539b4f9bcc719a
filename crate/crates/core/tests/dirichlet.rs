use critline::dirichlet::{
    partial_sum, solve_lambda0, sound_majorant, DirichletCoeffs, DirichletPolySpec, MajorantParams,
};
use critline::grid::{build_grid, GridParams};
use critline::models::{model_partial_sum, PhaseAssignment};
use critline::primes::sieve_primes;
use proptest::prelude::*;

/// `(p, m)` when `n = p^m` for a prime `p`, by trial division.
fn prime_power(n: u64) -> Option<(u64, u32)> {
    let p = (2..=n).find(|d| n % d == 0)?;
    let mut m = 0;
    let mut k = n;
    while k % p == 0 {
        k /= p;
        m += 1;
    }
    (k == 1).then_some((p, m))
}

#[test]
fn lambda0_brackets_and_rounds() {
    let l = solve_lambda0();
    let f = |x: f64| (-x).exp() - x - 0.5 * x * x;
    assert!(f(0.45) > 0.0 && f(0.5) < 0.0);
    assert!(l > 0.45 && l < 0.5);
    assert_eq!(format!("{l:.4}"), "0.4912");
    assert!(f(l).abs() < 1e-12);
}

#[test]
fn hand_sum_over_two_and_three() {
    let t = sieve_primes(10).unwrap();
    let spec = DirichletPolySpec::new(1, 1, 0.6, 10.0, 4f64.ln()).unwrap();
    let a = |n: f64| 1.0 - n.ln() / 10.0;
    let hand = a(2.0) * 2f64.powf(-0.6) + a(3.0) * 3f64.powf(-0.6) + 0.5 * a(4.0) * 2f64.powf(-1.2);
    assert!((partial_sum(&spec, &t, 0.0).unwrap() - hand).abs() < 1e-14);
}

#[test]
fn empty_cutoff_is_zero() {
    let t = sieve_primes(10).unwrap();
    let spec = DirichletPolySpec::new(1, 1, 0.5, 10.0, 1.5f64.ln()).unwrap();
    assert_eq!(partial_sum(&spec, &t, 2.5).unwrap(), 0.0);
}

#[test]
fn majorant_matches_von_mangoldt_sum() {
    let log_x = 6.0;
    let table = sieve_primes(500).unwrap();
    let lambda = 0.7;
    let p = MajorantParams { log_x, lambda, log_t: 5.0 };
    let sigma = 0.5 + lambda / log_x;
    for tau in [0.0, 3.3, 41.0] {
        let v = sound_majorant(p, &table, tau).unwrap();
        let x = log_x.exp();
        let mut prime_part = 0.0;
        let mut cubes = 0.0;
        for n in 2..=x as u64 {
            if let Some((q, m)) = prime_power(n) {
                let ln = (n as f64).ln();
                // Λ(n)/log n = 1/m
                let term = (q as f64).ln() / ln * (n as f64).powf(-sigma) * (log_x - ln) / log_x * (tau * ln).cos();
                if m <= 2 {
                    prime_part += term;
                } else {
                    cubes += (n as f64).powf(-sigma) / m as f64;
                }
            }
        }
        assert!((v.prime_part - prime_part).abs() < 1e-12, "τ={tau}");
        assert!(v.omitted_powers <= cubes + 1e-12);
        assert!((v.linear_term - 0.5 * (1.0 + lambda) * 5.0 / log_x).abs() < 1e-15);
    }
}

#[test]
fn zero_phases_reproduce_the_deterministic_sum() {
    let table = sieve_primes(3000).unwrap();
    let spec = DirichletPolySpec::new(2, 1, 0.55, 30.0, 3000f64.ln()).unwrap();
    let a = PhaseAssignment::constant(table.len(), 0.0);
    let m = model_partial_sum(&spec, &table, &a).unwrap();
    assert!((m - partial_sum(&spec, &table, 0.0).unwrap()).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]
    #[test]
    fn even_in_t(t in -1e4f64..1e4, sigma in 0.5f64..1.0, log_tell in 1.0f64..7.0) {
        let table = sieve_primes(1200).unwrap();
        let spec = DirichletPolySpec::new(1, 1, sigma, 2.0 * log_tell, log_tell).unwrap();
        prop_assert_eq!(partial_sum(&spec, &table, t).unwrap(), partial_sum(&spec, &table, -t).unwrap());
    }

    #[test]
    fn nested_cutoffs_telescope(t in -500f64..500.0, log_t in 3.0f64..8.0) {
        // log T_𝓛 ≤ e^{1-θ} log T keeps the table below e^{14}.
        let g = build_grid(GridParams::new(log_t, 1.0).with_cutoff(0.5)).unwrap();
        let n = g.capital_l;
        let table = sieve_primes(g.log_t_at(n).exp() as u64 + 2).unwrap();
        let mut total = 0.0;
        for l in 1..=n {
            let s = DirichletPolySpec::from_grid(&g, n, l).unwrap();
            total += DirichletCoeffs::band(&s, &table, g.log_t_at(l - 1)).unwrap().eval(t);
        }
        let full = partial_sum(&DirichletPolySpec::from_grid(&g, n, n).unwrap(), &table, t).unwrap();
        prop_assert!((total - full).abs() < 1e-10);
    }
}
