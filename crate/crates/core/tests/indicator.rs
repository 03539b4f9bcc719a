use critline::indicator::*;
use critline::LabError;

fn check_case(delta: f64, a: u32, x: f64) -> IndicatorPoly {
    let p = build_indicator_poly(delta, a, x).unwrap();
    let r = validate_sandwich(&p, 10_000);
    assert!(r.valid(), "Δ={delta} a={a}: {r:?}");
    assert_eq!(r.grid_points, 10_006);
    let audit = p.audit();
    assert!(audit.ok(), "{audit:?}");
    p
}

#[test]
fn sandwich_holds_for_three_cases() {
    for (d, a, x) in [(3.0, 5, 30.0), (5.0, 5, 50.0), (10.0, 4, 100.0)] {
        let p = check_case(d, a, x);
        assert_eq!(p.ln_eps, -d.powi(a as i32 - 2));
        // the tail and remainder both sit well below ε
        assert!(p.ln_tail_bound < p.ln_eps);
        assert!(p.ln_remainder < p.ln_eps);
    }
}

#[test]
fn values_near_the_window() {
    let p = build_indicator_poly(3.0, 5, 30.0).unwrap();
    let eps = p.eps();
    for x in [0.0, 0.1, 1.0 / 6.0, 1.0 / 3.0] {
        let v = eval_poly(&p, x).unwrap();
        assert!(v >= 1.0 - eps && v <= 1.0 + eps, "{x}: {v}");
    }
    for x in [-1.0, -0.05, 0.4, 5.0, 29.9] {
        assert!(eval_poly(&p, x).unwrap() <= eps, "{x}");
    }
}

#[test]
fn corrupted_coefficient_is_caught() {
    let mut p = build_indicator_poly(3.0, 5, 30.0).unwrap();
    let top = p.largest_stored();
    p.corrupt_coefficient(top, 2.0).unwrap();
    let r = validate_sandwich(&p, 10_000);
    assert!(r.upper_violations > 0, "{r:?}");
    assert!(!r.valid());
}

#[test]
fn finer_grid_is_stable() {
    let p = build_indicator_poly(5.0, 5, 50.0).unwrap();
    let a = validate_sandwich(&p, 10_000);
    let b = validate_sandwich(&p, 20_000);
    assert!((a.max_excess - b.max_excess).abs() < 1e-6);
}

#[test]
fn outside_range_is_flagged() {
    let p = build_indicator_poly(3.0, 5, 30.0).unwrap();
    assert!(matches!(
        eval_poly(&p, 31.0),
        Err(LabError::OutsideCertifiedRange { .. })
    ));
    assert!(!eval_enclosure(&p, -31.0).certified);
    assert!(eval_enclosure(&p, 30.0).certified);
}

#[test]
fn document_round_trip() {
    let p = build_indicator_poly(3.0, 5, 30.0).unwrap();
    let doc = p.to_document();
    let json = serde_json::to_string(&doc).unwrap();
    let back: IndicatorDocument = serde_json::from_str(&json).unwrap();
    assert_eq!(back, doc);
    assert_eq!(back.degree, p.degree);
    for (s, c) in back.coeffs.iter().zip(&p.coeffs) {
        assert_eq!(s.parse::<f64>().unwrap(), *c);
    }
}

#[test]
fn budget_series_bound() {
    for (d, a) in [(3.0, 5), (5.0, 5), (10.0, 4)] {
        for y in [0.0, 0.01, 0.5, 3.0] {
            let (lhs, rhs) = moment_budget(d, a, y);
            assert!(lhs <= rhs, "Δ={d} a={a} y={y}");
        }
    }
}
