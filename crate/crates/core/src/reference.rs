//! Closed-form flow of the linear saddle and an adaptive Simpson oracle
//! for its Lagrangian descriptor. Shares no code with `integrate`.

use thiserror::Error;

const MAX_DEPTH: u32 = 60;
const MAX_EVALUATIONS: usize = 50_000_000;
const INITIAL_PANELS: usize = 16;

#[derive(Debug, Error, PartialEq)]
pub enum QuadratureError {
    #[error("recursion depth cap {MAX_DEPTH} reached before tolerance was met")]
    DepthExceeded,
    #[error("evaluation budget exhausted before tolerance was met")]
    BudgetExceeded,
    #[error("integrand is not finite on the interval")]
    NonFinite,
    #[error("invalid quadrature request: {0}")]
    BadInput(&'static str),
}

/// `x(t) = x0 e^{lambda t}`, `y(t) = y0 e^{-mu t}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticSaddleFlow {
    pub lambda: f64,
    pub mu: f64,
}

impl AnalyticSaddleFlow {
    pub fn new(lambda: f64, mu: f64) -> Self {
        AnalyticSaddleFlow { lambda, mu }
    }

    pub fn position(&self, x0: [f64; 2], t: f64) -> [f64; 2] {
        [x0[0] * (self.lambda * t).exp(), x0[1] * (-self.mu * t).exp()]
    }

    pub fn speed(&self, x0: [f64; 2], t: f64) -> f64 {
        let a = self.lambda * x0[0] * (self.lambda * t).exp();
        let b = self.mu * x0[1] * (-self.mu * t).exp();
        a.hypot(b)
    }

    /// Arclength of `x(t; x0)` over `[-tau, tau]`.
    pub fn oracle_m(&self, x0: [f64; 2], tau: f64, quad_tol: f64) -> Result<f64, QuadratureError> {
        if !(tau >= 0.0) {
            return Err(QuadratureError::BadInput("tau must be non-negative"));
        }
        if !(quad_tol > 0.0) {
            return Err(QuadratureError::BadInput("quad_tol must be positive"));
        }
        adaptive_simpson(|t| self.speed(x0, t), -tau, tau, quad_tol)
    }

    /// Closed form for initial conditions on an axis, where the speed is a
    /// single exponential.
    pub fn on_axis_m(&self, x0: [f64; 2], tau: f64) -> Option<f64> {
        let span = |rate: f64| (rate * tau).exp() - (-rate * tau).exp();
        match (x0[0] == 0.0, x0[1] == 0.0) {
            (true, _) => Some(x0[1].abs() * span(self.mu)),
            (_, true) => Some(x0[0].abs() * span(self.lambda)),
            _ => None,
        }
    }
}

struct Simpson<F> {
    f: F,
    evaluations: usize,
}

impl<F: Fn(f64) -> f64> Simpson<F> {
    fn eval(&mut self, t: f64) -> Result<f64, QuadratureError> {
        self.evaluations += 1;
        if self.evaluations > MAX_EVALUATIONS {
            return Err(QuadratureError::BudgetExceeded);
        }
        let v = (self.f)(t);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(QuadratureError::NonFinite)
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn recurse(
        &mut self,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        eps: f64,
        depth: u32,
    ) -> Result<f64, QuadratureError> {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let flm = self.eval(lm)?;
        let frm = self.eval(rm)?;
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * eps {
            return Ok(left + right + delta / 15.0);
        }
        if depth >= MAX_DEPTH {
            return Err(QuadratureError::DepthExceeded);
        }
        let l = self.recurse(a, m, fa, flm, fm, left, 0.5 * eps, depth + 1)?;
        let r = self.recurse(m, b, fm, frm, fb, right, 0.5 * eps, depth + 1)?;
        Ok(l + r)
    }
}

/// Adaptive Simpson quadrature with absolute error target
/// `tol * (1 + |I|)`, where `|I|` is taken from a composite first pass.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<f64, QuadratureError> {
    if a == b {
        return Ok(0.0);
    }
    let mut q = Simpson { f, evaluations: 0 };
    let h = (b - a) / INITIAL_PANELS as f64;
    let nodes: Vec<f64> = (0..=2 * INITIAL_PANELS)
        .map(|k| a + 0.5 * h * k as f64)
        .collect();
    let values = nodes
        .iter()
        .map(|&t| q.eval(t))
        .collect::<Result<Vec<_>, _>>()?;
    let panels: Vec<f64> = (0..INITIAL_PANELS)
        .map(|p| h / 6.0 * (values[2 * p] + 4.0 * values[2 * p + 1] + values[2 * p + 2]))
        .collect();
    let estimate: f64 = panels.iter().sum();
    let eps = tol * (1.0 + estimate.abs()) / INITIAL_PANELS as f64;
    let mut total = 0.0;
    for (p, &whole) in panels.iter().enumerate() {
        let lo = nodes[2 * p];
        let hi = if p + 1 == INITIAL_PANELS { b } else { nodes[2 * p + 2] };
        total += q.recurse(
            lo,
            hi,
            values[2 * p],
            values[2 * p + 1],
            values[2 * p + 2],
            whole,
            eps,
            0,
        )?;
    }
    Ok(total)
}
