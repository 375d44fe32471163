//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each exported function has a plain Rust counterpart (`*_impl`) returning
//! `Result<_, String>` so the logic can be tested natively.

use lagdesc::analyze::{detect_manifolds, partial_derivative, Axis, Crossing};
use lagdesc::expr::{Expr, Var};
use lagdesc::fields::FieldSpec;
use lagdesc::integrate::{compute_m, IntegratorConfig};
use lagdesc::ldfield::{compute_field, GridSpec, ScalarField};
use lagdesc::reference::AnalyticSaddleFlow;
use wasm_bindgen::prelude::*;

/// Result of scanning a field over a square grid.
#[wasm_bindgen]
pub struct Scan {
    n: usize,
    m: Vec<u8>,
    dx: Vec<u8>,
    dy: Vec<u8>,
    crossings: Vec<f64>,
    summary: String,
}

#[wasm_bindgen]
impl Scan {
    /// Nodes per side.
    #[wasm_bindgen(getter)]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Greyscale M, one byte per node, top row first.
    pub fn m_pixels(&self) -> Vec<u8> {
        self.m.clone()
    }

    /// Sign of dM/dx0: dark negative, light positive, mid-grey zero.
    pub fn dx_pixels(&self) -> Vec<u8> {
        self.dx.clone()
    }

    pub fn dy_pixels(&self) -> Vec<u8> {
        self.dy.clone()
    }

    /// Flattened `[kind, x, y, jump]` quadruples; kind 0 is a zero of
    /// dM/dx0, kind 1 a zero of dM/dy0.
    pub fn crossings(&self) -> Vec<f64> {
        self.crossings.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn summary(&self) -> String {
        self.summary.clone()
    }
}

fn to_js(e: String) -> JsError {
    JsError::new(&e)
}

/// Computes M for `spec` on `[-half, half]^2` with `n x n` nodes, then its
/// partial derivatives and their sign changes.
#[wasm_bindgen]
pub fn scan(spec: &str, half: f64, n: usize, tau: f64) -> Result<Scan, JsError> {
    scan_impl(spec, half, n, tau).map_err(to_js)
}

/// Simplified derivative of `expr` with respect to `var` (`x`, `y` or `t`).
#[wasm_bindgen]
pub fn derivative(expr: &str, var: &str) -> Result<String, JsError> {
    derivative_impl(expr, var).map_err(to_js)
}

/// Numeric and quadrature values of M for a linear saddle, as
/// `[numeric, oracle, relative error]`.
#[wasm_bindgen]
pub fn oracle_check(lambda: f64, mu: f64, x: f64, y: f64, tau: f64) -> Result<Vec<f64>, JsError> {
    oracle_check_impl(lambda, mu, x, y, tau).map(|v| v.to_vec()).map_err(to_js)
}

pub const MAX_NODES_PER_SIDE: usize = 301;

pub fn scan_impl(spec: &str, half: f64, n: usize, tau: f64) -> Result<Scan, String> {
    if !(3..=MAX_NODES_PER_SIDE).contains(&n) {
        return Err(format!("grid size must be between 3 and {MAX_NODES_PER_SIDE}"));
    }
    let field = spec
        .parse::<FieldSpec>()
        .and_then(|s| s.build())
        .map_err(|e| e.to_string())?;
    let grid = GridSpec::square(-half, half, n).map_err(|e| e.to_string())?;
    let cfg = IntegratorConfig::default_for_tau(tau);
    let m = compute_field(&field, &grid, 0.0, tau, &cfg).map_err(|e| e.to_string())?;
    if m.valid_count() == 0 {
        return Err("no valid nodes".into());
    }
    let dx = partial_derivative(&m, Axis::X).map_err(|e| e.to_string())?;
    let dy = partial_derivative(&m, Axis::Y).map_err(|e| e.to_string())?;
    let mask = detect_manifolds(&dx, &dy, 0.0).map_err(|e| e.to_string())?;

    let mut crossings = Vec::with_capacity(4 * (mask.x_crossings.len() + mask.y_crossings.len()));
    let mut push = |kind: f64, cs: &[Crossing]| {
        for c in cs {
            crossings.extend_from_slice(&[kind, c.x, c.y, c.jump]);
        }
    };
    push(0.0, &mask.x_crossings);
    push(1.0, &mask.y_crossings);

    let summary = format!(
        "{}: {n}x{n} nodes, {} valid, {} zeros of dM/dx0, {} of dM/dy0",
        field.name(),
        m.valid_count(),
        mask.x_crossings.len(),
        mask.y_crossings.len()
    );
    Ok(Scan {
        n,
        m: greyscale(&m),
        dx: sign_image(&dx.field),
        dy: sign_image(&dy.field),
        crossings,
        summary,
    })
}

/// Linear map of the valid range onto 1..=255, top row first; invalid
/// nodes are 0.
fn greyscale(f: &ScalarField) -> Vec<u8> {
    let (lo, hi) = f.valid_range().unwrap_or((0.0, 0.0));
    let g = f.grid;
    let mut out = Vec::with_capacity(g.len());
    for j in (0..g.ny).rev() {
        for i in 0..g.nx {
            let k = g.index(i, j);
            out.push(if !f.valid[k] {
                0
            } else if hi > lo {
                1 + (254.0 * (f.values[k] - lo) / (hi - lo)).round() as u8
            } else {
                128
            });
        }
    }
    out
}

fn sign_image(f: &ScalarField) -> Vec<u8> {
    let g = f.grid;
    let mut out = Vec::with_capacity(g.len());
    for j in (0..g.ny).rev() {
        for i in 0..g.nx {
            let k = g.index(i, j);
            let v = f.values[k];
            out.push(match (f.valid[k], v) {
                (false, _) => 0,
                (true, v) if v > 0.0 => 230,
                (true, v) if v < 0.0 => 40,
                _ => 128,
            });
        }
    }
    out
}

pub fn derivative_impl(expr: &str, var: &str) -> Result<String, String> {
    let v = match var.trim() {
        "x" => Var::X,
        "y" => Var::Y,
        "t" => Var::T,
        other => return Err(format!("unknown variable `{other}`")),
    };
    let e = Expr::parse(expr).map_err(|e| e.to_string())?;
    Ok(e.differentiate(v).to_string())
}

pub fn oracle_check_impl(lambda: f64, mu: f64, x: f64, y: f64, tau: f64) -> Result<[f64; 3], String> {
    let spec = FieldSpec::Saddle { lambda, mu };
    let field = spec.build().map_err(|e| e.to_string())?;
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(format!("tau must be finite and non-negative, got {tau}"));
    }
    let exact = AnalyticSaddleFlow::new(lambda, mu)
        .oracle_m([x, y], tau, 1e-12)
        .map_err(|e| e.to_string())?;
    let numeric = compute_m(&field, [x, y], 0.0, tau, &IntegratorConfig::rk45(1e-8, 1e-10));
    if !numeric.valid {
        return Err("trajectory escaped".into());
    }
    let err = if exact == 0.0 {
        numeric.value.abs()
    } else {
        (numeric.value - exact).abs() / exact
    };
    Ok([numeric.value, exact, err])
}
