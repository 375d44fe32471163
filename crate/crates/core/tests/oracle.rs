use lagdesc::integrate::{compute_m, integrate_arclength, Direction, IntegratorConfig};
use lagdesc::reference::{adaptive_simpson, AnalyticSaddleFlow};
use lagdesc::fields::{SaddleParams, VectorField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Arclength of the (1, 2) saddle trajectory through (0.3, -0.4) over
// [-10, 10], from 40-digit arbitrary-precision quadrature.
const GOLDEN_1_2: f64 = 194072685.5655140789;
// Same for the (1, 1) saddle through (0.5, 0.5) over [-20, 20].
const GOLDEN_1_1: f64 = 485165194.5625771931;

fn saddle(l: f64, m: f64) -> VectorField {
    VectorField::linear_saddle(SaddleParams::new(l, m).unwrap())
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn oracle_matches_frozen_values() {
    let o = AnalyticSaddleFlow::new(1.0, 2.0).oracle_m([0.3, -0.4], 10.0, 1e-12).unwrap();
    assert!(rel(o, GOLDEN_1_2) <= 1e-11, "{o}");
    let o = AnalyticSaddleFlow::new(1.0, 1.0).oracle_m([0.5, 0.5], 20.0, 1e-12).unwrap();
    assert!(rel(o, GOLDEN_1_1) <= 1e-11, "{o}");
}

#[test]
fn numeric_matches_frozen_values() {
    let cfg = IntegratorConfig::default_for_tau(10.0);
    let m = compute_m(&saddle(1.0, 2.0), [0.3, -0.4], 0.0, 10.0, &cfg);
    assert!(m.valid && rel(m.value, GOLDEN_1_2) <= 1e-6, "{}", m.value);
    let cfg = IntegratorConfig::rk45(1e-8, 1e-10);
    let m = compute_m(&saddle(1.0, 1.0), [0.5, 0.5], 0.0, 20.0, &cfg);
    assert!(m.valid && rel(m.value, GOLDEN_1_1) <= 1e-6, "{}", m.value);
}

#[test]
fn forward_half_matches_quadrature() {
    let flow = AnalyticSaddleFlow::new(1.0, 2.0);
    let x0 = [0.1, 0.7];
    let expected = adaptive_simpson(|t| flow.speed(x0, t), 0.0, 10.0, 1e-12).unwrap();
    let cfg = IntegratorConfig::default_for_tau(10.0);
    let a = integrate_arclength(&saddle(1.0, 2.0), x0, 0.0, 10.0, Direction::Forward, &cfg);
    assert!(a.valid);
    assert!(rel(a.length, expected) <= 1e-6);
    let end = flow.position(x0, 10.0);
    assert!(rel(a.end[0], end[0]) <= 1e-6);
}

#[test]
fn oracle_is_symmetric_under_rate_and_axis_swap() {
    let a = AnalyticSaddleFlow::new(1.0, 2.0);
    let b = AnalyticSaddleFlow::new(2.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let (x, y) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let ma = a.oracle_m([x, y], 5.0, 1e-12).unwrap();
        let mb = b.oracle_m([y, x], 5.0, 1e-12).unwrap();
        assert!(rel(ma, mb) <= 1e-10);
    }
}

#[test]
fn oracle_agrees_with_closed_form_on_axes() {
    let o = AnalyticSaddleFlow::new(1.0, 2.0);
    for p in [[0.0, 0.3], [-0.8, 0.0], [0.0, -1.0]] {
        let q = o.oracle_m(p, 10.0, 1e-12).unwrap();
        let c = o.on_axis_m(p, 10.0).unwrap();
        assert!(rel(q, c) <= 1e-10, "{p:?}: {q} vs {c}");
    }
}

#[test]
fn quadrature_tolerance_is_self_consistent() {
    let o = AnalyticSaddleFlow::new(2.0, 1.0);
    let coarse = o.oracle_m([0.2, 0.9], 10.0, 1e-8).unwrap();
    let fine = o.oracle_m([0.2, 0.9], 10.0, 1e-13).unwrap();
    assert!(rel(coarse, fine) <= 1e-8);
}

#[test]
fn rk45_agrees_with_oracle_at_random_points() {
    let cfg = IntegratorConfig::rk45(1e-8, 1e-10);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (l, m) in [(1.0, 1.0), (1.0, 2.0), (2.0, 1.0)] {
        let field = saddle(l, m);
        let flow = AnalyticSaddleFlow::new(l, m);
        for _ in 0..25 {
            let p = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let d = compute_m(&field, p, 0.0, 10.0, &cfg);
            let o = flow.oracle_m(p, 10.0, 1e-12).unwrap();
            assert!(d.valid && rel(d.value, o) <= 1e-6, "({l},{m}) {p:?}: {} vs {o}", d.value);
        }
    }
}

#[test]
fn rk4_converges_at_fourth_order() {
    let field = saddle(1.0, 2.0);
    let flow = AnalyticSaddleFlow::new(1.0, 2.0);
    let tau = 10.0;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let p = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let o = flow.oracle_m(p, tau, 1e-14).unwrap();
        let err = |div: f64| {
            let d = compute_m(&field, p, 0.0, tau, &IntegratorConfig::rk4(tau / div));
            (d.value - o).abs()
        };
        let (e1, e2, e3) = (err(1000.0), err(2000.0), err(4000.0));
        for order in [(e1 / e2).log2(), (e2 / e3).log2()] {
            assert!((3.5..=4.5).contains(&order), "{p:?}: {e1} {e2} {e3}");
        }
    }
}

#[test]
fn descriptor_is_additive_in_time() {
    let field = saddle(1.0, 2.0);
    let cfg = IntegratorConfig::rk45(1e-10, 1e-12);
    let p = [0.4, -0.2];
    let whole = integrate_arclength(&field, p, 0.0, 6.0, Direction::Forward, &cfg);
    let first = integrate_arclength(&field, p, 0.0, 2.5, Direction::Forward, &cfg);
    let rest = integrate_arclength(&field, first.end, 2.5, 3.5, Direction::Forward, &cfg);
    assert!(rel(first.length + rest.length, whole.length) <= 1e-8);
}

#[test]
fn autonomous_fields_ignore_t0() {
    let field = saddle(2.0, 1.0);
    let cfg = IntegratorConfig::default_for_tau(10.0);
    let p = [0.35, 0.6];
    let base = compute_m(&field, p, 0.0, 10.0, &cfg).value;
    for t0 in [-3.0, 7.0] {
        assert!(rel(compute_m(&field, p, t0, 10.0, &cfg).value, base) <= 1e-8);
    }
}

#[test]
fn descriptor_grows_with_tau() {
    let field = saddle(1.0, 1.0);
    let mut prev = 0.0;
    for tau in [0.0, 0.5, 1.0, 2.0, 5.0, 10.0] {
        let m = compute_m(&field, [0.2, 0.3], 0.0, tau, &IntegratorConfig::default_for_tau(tau));
        assert!(m.valid && m.value >= prev);
        prev = m.value;
    }
}
