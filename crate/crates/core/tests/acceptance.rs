//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use lagdesc::analyze::{detect_manifolds, partial_derivative, Axis, ManifoldMask};
use lagdesc::expr::{BinaryOp, Expr, UnaryOp, Var};
use lagdesc::fields::{SaddleParams, VectorField};
use lagdesc::integrate::{compute_m, IntegratorConfig};
use lagdesc::io::{read_csv, write_csv, write_mask_csv, write_pgm, MASK_HEADER};
use lagdesc::ldfield::{compute_field, GridSpec, ScalarField};
use lagdesc::reference::AnalyticSaddleFlow;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn saddle(l: f64, m: f64) -> VectorField {
    VectorField::linear_saddle(SaddleParams::new(l, m).unwrap())
}

fn full_grid() -> GridSpec {
    GridSpec::square(-1.0, 1.0, 201).unwrap()
}

fn mask_of(m: &ScalarField) -> ManifoldMask {
    let dx = partial_derivative(m, Axis::X).unwrap();
    let dy = partial_derivative(m, Axis::Y).unwrap();
    detect_manifolds(&dx, &dy, 0.0).unwrap()
}

/// Computes M on the 201 x 201 grid and returns (row, column) coverage of
/// crossings within one cell of the axes, plus the wall time.
fn coverage(field: &VectorField, tau: f64) -> (f64, f64, f64) {
    let grid = full_grid();
    let start = Instant::now();
    let m = compute_field(field, &grid, 0.0, tau, &IntegratorConfig::default_for_tau(tau)).unwrap();
    let mask = mask_of(&m);
    let secs = start.elapsed().as_secs_f64();
    (
        mask.row_coverage(0.0, grid.hx()),
        mask.column_coverage(0.0, grid.hy()),
        secs,
    )
}

fn saddle_figure(cases: &[(f64, f64, f64)], time_limit: Option<f64>) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for &(l, m, tau) in cases {
        let (rows, cols, secs) = coverage(&saddle(l, m), tau);
        ok &= rows >= 0.99 && cols >= 0.99;
        if let Some(limit) = time_limit {
            ok &= secs <= limit;
        }
        parts.push(format!(
            "({l},{m}) tau={tau}: rows {:.1}% cols {:.1}% in {secs:.1}s",
            rows * 100.0,
            cols * 100.0
        ));
    }
    check(ok, parts.join("; "))
}

fn fig1() -> Outcome {
    saddle_figure(&[(1.0, 1.0, 20.0)], Some(60.0))
}

fn fig3() -> Outcome {
    saddle_figure(&[(1.0, 2.0, 10.0), (2.0, 1.0, 10.0)], None)
}

fn fig2_analog() -> Outcome {
    let f = VectorField::separable_incompressible(Expr::parse("tanh(x)").unwrap()).unwrap();
    let (rows, cols, secs) = coverage(&f, 10.0);
    check(
        rows >= 0.95 && cols >= 0.80,
        format!("rows {:.1}% cols {:.1}% in {secs:.1}s", rows * 100.0, cols * 100.0),
    )
}

fn oracle_equivalence() -> Outcome {
    let cfg = IntegratorConfig::rk45(1e-8, 1e-10);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for (l, m) in [(1.0, 1.0), (1.0, 2.0), (2.0, 1.0)] {
        let field = saddle(l, m);
        let flow = AnalyticSaddleFlow::new(l, m);
        for _ in 0..100 {
            let p = [rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)];
            let d = compute_m(&field, p, 0.0, 10.0, &cfg);
            let o = flow.oracle_m(p, 10.0, 1e-12).map_err(|e| e.to_string())?;
            if !d.valid {
                return Err(format!("invalid result at {p:?}"));
            }
            worst = worst.max(rel(d.value, o));
        }
    }
    check(worst <= 1e-6, format!("max rel err {worst:.2e} over 300 points"))
}

fn convergence_order() -> Outcome {
    let field = saddle(1.0, 2.0);
    let flow = AnalyticSaddleFlow::new(1.0, 2.0);
    let tau = 10.0;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..10 {
        let p = [rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)];
        let o = flow.oracle_m(p, tau, 1e-14).map_err(|e| e.to_string())?;
        let err = |div: f64| (compute_m(&field, p, 0.0, tau, &IntegratorConfig::rk4(tau / div)).value - o).abs();
        let (e1, e2, e3) = (err(1000.0), err(2000.0), err(4000.0));
        for order in [(e1 / e2).log2(), (e2 / e3).log2()] {
            lo = lo.min(order);
            hi = hi.max(order);
        }
    }
    check(
        lo >= 3.5 && hi <= 4.5,
        format!("observed orders in [{lo:.3}, {hi:.3}]"),
    )
}

fn invariants() -> Outcome {
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let tanh = VectorField::separable_incompressible(Expr::parse("tanh(x)").unwrap()).unwrap();
    let cfg = IntegratorConfig::default_for_tau(10.0);

    let mut non_negative = true;
    let mut zero_tau = true;
    let mut autonomy: f64 = 0.0;
    let mut symmetry: f64 = 0.0;
    for (l, m) in [(1.0, 1.0), (1.0, 2.0), (2.0, 1.0)] {
        let f = saddle(l, m);
        for _ in 0..30 {
            let (x, y) = (rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
            let base = compute_m(&f, [x, y], 0.0, 10.0, &cfg);
            non_negative &= base.valid && base.value >= 0.0;
            zero_tau &= compute_m(&f, [x, y], 0.0, 0.0, &cfg).value == 0.0;
            for t0 in [-3.0, 7.0] {
                autonomy = autonomy.max(rel(compute_m(&f, [x, y], t0, 10.0, &cfg).value, base.value));
            }
            for p in [[-x, y], [x, -y], [-x, -y]] {
                symmetry = symmetry.max(rel(compute_m(&f, p, 0.0, 10.0, &cfg).value, base.value));
            }
        }
    }
    if !non_negative {
        failures.push("M < 0".to_string());
    }
    if !zero_tau {
        failures.push("M(tau=0) != 0".to_string());
    }
    if autonomy > 1e-8 {
        failures.push(format!("t0 dependence {autonomy:.1e}"));
    }
    if symmetry > 1e-9 {
        failures.push(format!("reflection asymmetry {symmetry:.1e}"));
    }
    for f in [saddle(1.0, 2.0), tanh.clone()] {
        if compute_m(&f, [0.0, 0.0], 0.0, 10.0, &cfg).value != 0.0 {
            failures.push(format!("fixed point of {} has M != 0", f.name()));
        }
    }

    let grid = GridSpec::square(-1.0, 1.0, 41).unwrap();
    let m = compute_field(&saddle(1.0, 2.0), &grid, 0.0, 10.0, &cfg).unwrap();
    let (a, b) = (mask_of(&m), mask_of(&m.scaled(2.0)));
    let same = |x: &[lagdesc::analyze::Crossing], y: &[lagdesc::analyze::Crossing]| {
        x.len() == y.len() && x.iter().zip(y).all(|(p, q)| (p.i, p.j, p.x, p.y) == (q.i, q.j, q.x, q.y))
    };
    if !(same(&a.x_crossings, &b.x_crossings) && same(&a.y_crossings, &b.y_crossings)) {
        failures.push("detection changed under M -> 2M".to_string());
    }

    let mut divergence: f64 = 0.0;
    for _ in 0..100 {
        let (x, y) = (rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
        divergence = divergence.max(tanh.divergence_fd(x, y, 0.0, 1e-5).abs());
    }
    if divergence > 1e-6 {
        failures.push(format!("divergence {divergence:.1e}"));
    }

    if failures.is_empty() {
        Ok(format!(
            "t0 {autonomy:.1e}, reflection {symmetry:.1e}, divergence {divergence:.1e}"
        ))
    } else {
        Err(failures.join("; "))
    }
}

fn random_expr(rng: &mut ChaCha8Rng, depth: usize) -> Expr {
    if depth <= 1 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..4) {
            0 => Expr::Var(Var::X),
            1 => Expr::Var(Var::Y),
            2 => Expr::Var(Var::T),
            _ => Expr::Const(match rng.gen_range(0..4) {
                0 => rng.gen_range(-100.0..100.0),
                1 => f64::from(rng.gen_range(0..10)),
                2 => 0.0,
                _ => 1.5e-9,
            }),
        };
    }
    if rng.gen_bool(0.4) {
        let op = if rng.gen_bool(0.3) {
            UnaryOp::Neg
        } else {
            UnaryOp::FUNCTIONS[rng.gen_range(0..UnaryOp::FUNCTIONS.len())]
        };
        Expr::unary(op, random_expr(rng, depth - 1))
    } else {
        let ops = [BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div, BinaryOp::Pow];
        let op = ops[rng.gen_range(0..ops.len())];
        Expr::binary(op, random_expr(rng, depth - 1), random_expr(rng, depth - 1))
    }
}

fn parser_and_derivatives() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in 0..1000 {
        let a = random_expr(&mut rng, 8);
        let folded = a.fold_constants();
        let text = folded.to_string();
        match Expr::parse(&text) {
            Ok(b) if b == folded => {}
            Ok(_) => return Err(format!("tree {n} reparsed differently: {text}")),
            Err(e) => return Err(format!("tree {n} failed to reparse: {text}: {e}")),
        }
    }

    let cases: &[(&str, f64, f64)] = &[
        ("sin(x)", -2.0, 2.0),
        ("cos(x)", -2.0, 2.0),
        ("tan(x)", -1.5, 1.5),
        ("tanh(x)", -2.0, 2.0),
        ("exp(x)", -2.0, 2.0),
        ("log(x)", 1e-3, 2.0),
        ("sqrt(x)", 1e-3, 2.0),
        ("abs(x)", 1e-3, 2.0),
        ("abs(x)", -2.0, -1e-3),
        ("sign(x)", 1e-3, 2.0),
        ("-x", -2.0, 2.0),
        ("x + x*x", -2.0, 2.0),
        ("x - 3*x", -2.0, 2.0),
        ("x * sin(x)", -2.0, 2.0),
        ("1 / (x + 3)", -2.0, 2.0),
        ("x^3", -2.0, 2.0),
        ("2^x", -2.0, 2.0),
        ("x^x", 1e-3, 2.0),
    ];
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for &(src, lo, hi) in cases {
        let f = Expr::parse(src).unwrap();
        let df = f.differentiate(Var::X);
        for k in 0..=40 {
            let x = lo + (hi - lo) * k as f64 / 40.0;
            let fd = (f.eval(x + h, 0.0, 0.0) - f.eval(x - h, 0.0, 0.0)) / (2.0 * h);
            let err = (df.eval(x, 0.0, 0.0) - fd).abs() / fd.abs().max(1.0);
            if err > 1e-6 {
                return Err(format!("d/dx {src} at {x}: rel err {err:.1e}"));
            }
            worst = worst.max(err);
        }
    }
    Ok(format!("1000 round-trips, {} derivative rules, max rel err {worst:.1e}", cases.len()))
}

fn io_suite() -> Outcome {
    let grid = GridSpec::square(-1.0, 1.0, 21).unwrap();
    let m = compute_field(&saddle(1.0, 1.0), &grid, 0.0, 20.0, &IntegratorConfig::default_for_tau(20.0)).unwrap();

    let back = read_csv(&write_csv(&m)).map_err(|e| e.to_string())?;
    let bitwise = back.grid == m.grid
        && back.valid == m.valid
        && back.values.iter().zip(&m.values).all(|(a, b)| a.to_bits() == b.to_bits());
    if !bitwise {
        return Err("CSV round-trip changed values".into());
    }

    let golden = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/saddle_1_1_tau20_21x21.pgm");
    let stored = std::fs::read(&golden).map_err(|e| format!("{}: {e}", golden.display()))?;
    if write_pgm(&m).map_err(|e| e.to_string())? != stored {
        return Err("PGM bytes differ from golden file".into());
    }

    let mask = mask_of(&m);
    let text = String::from_utf8(write_mask_csv(&mask)).map_err(|e| e.to_string())?;
    let mut lines = text.lines();
    if lines.next() != Some(MASK_HEADER) {
        return Err("mask header".into());
    }
    let mut rows = 0;
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        let numeric = cols.len() == 4 && cols[1..].iter().all(|c| c.parse::<f64>().is_ok());
        let kind_ok = matches!(cols[0], "stable_candidate" | "unstable_candidate");
        if !(numeric && kind_ok) {
            return Err(format!("bad mask row: {line}"));
        }
        rows += 1;
    }
    check(
        rows == mask.x_crossings.len() + mask.y_crossings.len(),
        format!("CSV bitwise, PGM golden, {rows} mask rows"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("1 saddle l=m=1 tau=20 on 201x201", fig1),
        ("2 saddles (1,2) and (2,1) tau=10 on 201x201", fig3),
        ("3 separable tanh(x) tau=10 on 201x201", fig2_analog),
        ("4 adaptive integrator vs quadrature oracle", oracle_equivalence),
        ("5 rk4 convergence order", convergence_order),
        ("6 invariant suite", invariants),
        ("7 parser and differentiator", parser_and_derivatives),
        ("8 file formats", io_suite),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        match run() {
            Ok(detail) => println!("[PASS] {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {name}: {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
