use critline::rng::StreamFactory;
use critline::zeta::{
    hardy_z_rs, level_set_from_samples, moment_via_levelsets_from, sample_log_abs, short_interval_max, zeta_half_line,
};
use num_complex::Complex64;

/// `ζ(s)` from the alternating eta series with Borwein's acceleration,
/// independent of the Euler–Maclaurin and Riemann–Siegel paths.
fn borwein_zeta(s: Complex64, n: usize) -> Complex64 {
    // d_k = n Σ_{i≤k} (n+i-1)! 4^i / ((n-i)! (2i)!), built by ratios.
    let mut d = Vec::with_capacity(n + 1);
    let mut term = 1.0 / n as f64; // i = 0 term divided by n
    let mut acc = term;
    d.push(n as f64 * acc);
    for i in 1..=n {
        let fi = i as f64;
        let nf = n as f64;
        term *= (nf + fi - 1.0) * 4.0 * (nf - fi + 1.0) / ((2.0 * fi - 1.0) * 2.0 * fi);
        acc += term;
        d.push(n as f64 * acc);
    }
    let dn = d[n];
    let mut eta = Complex64::new(0.0, 0.0);
    for (k, dk) in d.iter().take(n).enumerate() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let pow = (-s * ((k + 1) as f64).ln()).exp();
        eta += sign * (dk - dn) / dn * pow;
    }
    let eta = -eta;
    eta / (1.0 - ((1.0 - s) * 2f64.ln()).exp())
}

#[test]
fn value_at_one_half() {
    let z = zeta_half_line(0.0).unwrap().value;
    let oracle = borwein_zeta(Complex64::new(0.5, 0.0), 40);
    assert!((oracle.re + 1.460_354_508_809_586_8).abs() < 1e-12, "{oracle}");
    assert!((z - oracle).norm() < 1e-10);
    assert!((z.re + 1.4603545).abs() < 1e-6);
}

#[test]
fn agrees_with_eta_series_at_low_height() {
    for t in [0.7, 5.0, 14.134725, 21.0, 33.3] {
        let z = zeta_half_line(t).unwrap().value;
        let o = borwein_zeta(Complex64::new(0.5, t), 90);
        assert!((z - o).norm() < 1e-9 * o.norm().max(1e-3), "t={t}: {z} vs {o}");
    }
}

#[test]
fn first_zero() {
    assert!(zeta_half_line(14.134725).unwrap().value.norm() < 1e-4);
    let (a, _) = hardy_z_rs(14.13);
    let (b, _) = hardy_z_rs(14.14);
    assert!(a * b < 0.0, "Z(14.13) = {a}, Z(14.14) = {b}");
}

#[test]
fn schwarz_reflection() {
    let s = StreamFactory::new(3, "zeta_test");
    for i in 0..100 {
        let t = 1e5 * s.trial(i).uniform();
        let a = zeta_half_line(t).unwrap().value;
        let b = zeta_half_line(-t).unwrap().value;
        assert_eq!(a, b.conj());
    }
}

#[test]
fn level_set_extremes() {
    let xs = sample_log_abs(1e4, 2000, 11).unwrap();
    assert_eq!(level_set_from_samples(1e4, f64::NEG_INFINITY, &xs).fraction, 1.0);
    assert_eq!(level_set_from_samples(1e4, 1e6, &xs).fraction, 0.0);
}

#[test]
fn level_set_identity_is_exact_at_order_statistics() {
    let xs = sample_log_abs(1e5, 3000, 5).unwrap();
    let mut levels: Vec<f64> = xs.clone();
    levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
    levels.dedup();
    levels.insert(0, levels[0] - 1.0);
    for k in [0.5, 1.0, 2.0] {
        let (direct, ibp) = moment_via_levelsets_from(&xs, k, &levels).unwrap();
        assert!((direct - ibp).abs() <= 1e-10 * direct, "k={k}");
    }
    let (a, b) = moment_via_levelsets_from(&xs, 0.0, &levels).unwrap();
    assert_eq!((a, b), (1.0, 1.0));
}

#[test]
fn samples_are_reproducible() {
    assert_eq!(sample_log_abs(1e4, 500, 9).unwrap(), sample_log_abs(1e4, 500, 9).unwrap());
}

#[test]
fn degenerate_short_window() {
    let m = short_interval_max(1e4, 0.0, 1e4f64.ln(), 0.05).unwrap();
    assert_eq!(m.half_width, 1.0);
    assert!((m.argmax - 1e4).abs() <= 1.0);
}

#[test]
fn window_over_first_zero_dominates_its_points() {
    let m = short_interval_max(14.1347, 0.0, 3.0, 0.05).unwrap();
    // The endpoints and the center are grid points of any power-of-two grid.
    for t in [13.1347, 14.1347, 15.1347] {
        assert!(m.max_abs >= zeta_half_line(t).unwrap().value.norm());
    }
    let fine = short_interval_max(14.1347, 0.0, 3.0, 0.025).unwrap();
    assert!(fine.max_abs >= m.max_abs);
}
