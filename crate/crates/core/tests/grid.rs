use critline::grid::{barrier_bounds, build_grid, truncation_index, GridParams};
use proptest::prelude::*;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn reference_grid_at_log_t_ten_thousand() {
    let g = build_grid(GridParams::new(1e4, 1.0).with_cutoff(2.0)).unwrap();
    assert_eq!(g.capital_l, 4);
    assert!(close(g.beta(1), 0.01, 1e-15));
    assert!(close(g.beta(4), 3f64.exp() / 100.0, 1e-15));
    assert!(close(g.c(1), (100f64.ln() / 25.0).exp(), 1e-12));
    assert!(close(g.c(1), 1.2023, 5e-5));
    assert_eq!(g.params.gamma, 1.0 / 25.0);
}

#[test]
fn zero_gradient_barriers_are_symmetric() {
    // V = 0 lies outside the validated window V ∈ [k/2, 2k]·log log T.
    assert!(build_grid(GridParams::new(1e4, 1.0).with_v(0.0)).is_err());
    let mut g = build_grid(GridParams::new(1e4, 1.0).with_cutoff(2.0)).unwrap();
    g.kappa = 0.0;
    let b = barrier_bounds(&g);
    for l in 1..=g.capital_l {
        assert_eq!(b.band(l), (-g.c(l), g.c(l)));
    }
}

#[test]
fn midpoint_follows_the_gradient() {
    let log_t: f64 = 1e4;
    let g = build_grid(GridParams::new(log_t, 2.0).with_cutoff(2.0)).unwrap();
    assert!(close(g.params.v, 2.0 * log_t.ln(), 1e-12));
    assert!(close(g.kappa, 2.0, 1e-12));
    assert!(close(g.t(1), 100f64.ln(), 1e-12));
    let (lo, hi) = barrier_bounds(&g).band(1);
    assert!(close(0.5 * (lo + hi), 2.0 * 100f64.ln(), 1e-12));
}

#[test]
fn truncation_threshold_scan() {
    let g = build_grid(GridParams::new(1e4, 1.0).with_cutoff(2.0)).unwrap();
    let threshold = 0.01f64.powf(0.04);
    assert!(close(threshold, 0.8318, 5e-5));
    let tr = truncation_index(&g, 1).unwrap();
    let expected = (1..=g.capital_l).find(|&m| g.beta(m) > threshold);
    match expected {
        Some(m) => assert_eq!(tr.m, m),
        None => {
            assert!(tr.clamped);
            assert_eq!(tr.m, g.capital_l);
        }
    }
}

#[test]
fn degenerate_inputs_are_rejected() {
    assert!(build_grid(GridParams::new(1.0, 1.0)).is_err());
    assert!(build_grid(GridParams::new(1e4, 1.0).with_gamma(0.5)).is_err());
    assert!(build_grid(GridParams::new(f64::NAN, 1.0)).is_err());
}

proptest! {
    #[test]
    fn grid_invariants(log_t in 20.0f64..1e8, theta in 0.2f64..4.0) {
        let Ok(g) = build_grid(GridParams::new(log_t, 1.0).with_cutoff(theta)) else {
            return Ok(());
        };
        // Independent scan of β_ℓ ≤ e^{-θ}.
        let mut last = 0;
        for l in 1..80 {
            if ((l - 1) as f64).exp() / log_t.sqrt() <= (-theta).exp() {
                last = l;
            }
        }
        prop_assert_eq!(g.capital_l, last + 1);
        for l in 2..=g.capital_l {
            prop_assert_eq!(g.t(l) - g.t(l - 1), 1.0);
        }
        let b = barrier_bounds(&g);
        for l in 1..=g.capital_l {
            let (lp, up) = b.primed_band(l);
            prop_assert!(close(up - lp, 8.0 * g.c(l), 1e-9 * g.c(l).max(1.0)));
            let (lo, hi) = b.band(l);
            prop_assert!(lp < lo && hi < up);
        }
    }
}
