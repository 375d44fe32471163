//! Planar vector fields `v(x, y, t)` and the registry of named fields.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::expr::{Expr, ParseError, Program, UnaryOp, Var};

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("saddle rates must be positive and finite (lambda = {lambda}, mu = {mu})")]
    InvalidRates { lambda: f64, mu: f64 },
    #[error("separable generator f must depend on x only")]
    NotSeparable,
    #[error("invalid field spec `{spec}`: {reason}")]
    BadSpec { spec: String, reason: String },
    #[error("in {component}: {source}")]
    Parse {
        component: &'static str,
        #[source]
        source: ParseError,
    },
}

/// Rates of the linear saddle `x' = lambda x, y' = -mu y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleParams {
    lambda: f64,
    mu: f64,
}

impl SaddleParams {
    pub fn new(lambda: f64, mu: f64) -> Result<Self, FieldError> {
        let ok = |r: f64| r.is_finite() && r > 0.0;
        if !ok(lambda) || !ok(mu) {
            return Err(FieldError::InvalidRates { lambda, mu });
        }
        Ok(SaddleParams { lambda, mu })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Components {
    /// Closed-form linear saddle.
    Saddle(SaddleParams),
    /// Arbitrary `(x', y')` expressions.
    Expressions { dx: Expr, dy: Expr },
}

/// A named planar vector field.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    name: String,
    components: Components,
    autonomous: bool,
    program: Option<Program>,
}

impl VectorField {
    pub fn linear_saddle(p: SaddleParams) -> VectorField {
        VectorField {
            name: format!("saddle({},{})", p.lambda, p.mu),
            components: Components::Saddle(p),
            autonomous: true,
            program: None,
        }
    }

    /// The incompressible family `x' = f(x)`, `y' = -y f'(x)`, with `f'`
    /// obtained symbolically.
    pub fn separable_incompressible(f: Expr) -> Result<VectorField, FieldError> {
        if f.depends_on(Var::Y) || f.depends_on(Var::T) {
            return Err(FieldError::NotSeparable);
        }
        let df = f.differentiate(Var::X);
        let dy = Expr::unary(
            UnaryOp::Neg,
            Expr::binary(crate::expr::BinaryOp::Mul, Expr::Var(Var::Y), df),
        )
        .fold_constants();
        let name = format!("separable({f})");
        Ok(VectorField::expressions(name, f, dy))
    }

    pub fn from_expressions(dx: Expr, dy: Expr) -> VectorField {
        VectorField::expressions(format!("custom({dx},{dy})"), dx, dy)
    }

    fn expressions(name: String, dx: Expr, dy: Expr) -> VectorField {
        let autonomous = !dx.depends_on(Var::T) && !dy.depends_on(Var::T);
        let program = Some(Program::compile(&[&dx, &dy]));
        VectorField {
            name,
            components: Components::Expressions { dx, dy },
            autonomous,
            program,
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn components(&self) -> &Components {
        &self.components
    }

    pub fn is_autonomous(&self) -> bool {
        self.autonomous
    }

    pub fn saddle_params(&self) -> Option<SaddleParams> {
        match self.components {
            Components::Saddle(p) => Some(p),
            Components::Expressions { .. } => None,
        }
    }

    #[inline]
    pub fn velocity(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        match (&self.components, &self.program) {
            (Components::Saddle(p), _) => [p.lambda * x, -p.mu * y],
            (_, Some(prog)) => {
                let mut out = [0.0; 2];
                prog.eval_into(x, y, t, &mut out);
                out
            }
            (Components::Expressions { dx, dy }, None) => [dx.eval(x, y, t), dy.eval(x, y, t)],
        }
    }

    /// Divergence by central differences with step `h`.
    pub fn divergence_fd(&self, x: f64, y: f64, t: f64, h: f64) -> f64 {
        let dudx = (self.velocity(x + h, y, t)[0] - self.velocity(x - h, y, t)[0]) / (2.0 * h);
        let dvdy = (self.velocity(x, y + h, t)[1] - self.velocity(x, y - h, t)[1]) / (2.0 * h);
        dudx + dvdy
    }

    /// Jacobian by central differences with step `h`, row-major
    /// `[[du/dx, du/dy], [dv/dx, dv/dy]]`.
    pub fn jacobian_fd(&self, x: f64, y: f64, t: f64, h: f64) -> [[f64; 2]; 2] {
        let ex = [self.velocity(x + h, y, t), self.velocity(x - h, y, t)];
        let ey = [self.velocity(x, y + h, t), self.velocity(x, y - h, t)];
        let d = |a: f64, b: f64| (a - b) / (2.0 * h);
        [
            [d(ex[0][0], ex[1][0]), d(ey[0][0], ey[1][0])],
            [d(ex[0][1], ex[1][1]), d(ey[0][1], ey[1][1])],
        ]
    }
}

/// Registry string for a field: `saddle(l,m)`, `separable(EXPR)` or
/// `custom(DX,DY)`. Function calls are unary, so the first top-level comma
/// in `custom(...)` splits the two components.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldSpec {
    Saddle { lambda: f64, mu: f64 },
    Separable(String),
    Custom { dx: String, dy: String },
}

impl FieldSpec {
    pub fn build(&self) -> Result<VectorField, FieldError> {
        let parse = |component: &'static str, src: &str| {
            Expr::parse(src).map_err(|source| FieldError::Parse { component, source })
        };
        match self {
            FieldSpec::Saddle { lambda, mu } => {
                Ok(VectorField::linear_saddle(SaddleParams::new(*lambda, *mu)?))
            }
            FieldSpec::Separable(f) => {
                VectorField::separable_incompressible(parse("separable f", f)?)
            }
            FieldSpec::Custom { dx, dy } => Ok(VectorField::from_expressions(
                parse("dx", dx)?,
                parse("dy", dy)?,
            )),
        }
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldSpec::Saddle { lambda, mu } => write!(f, "saddle({lambda},{mu})"),
            FieldSpec::Separable(e) => write!(f, "separable({e})"),
            FieldSpec::Custom { dx, dy } => write!(f, "custom({dx},{dy})"),
        }
    }
}

impl FromStr for FieldSpec {
    type Err = FieldError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |reason: &str| FieldError::BadSpec {
            spec: s.to_string(),
            reason: reason.to_string(),
        };
        let s_trim = s.trim();
        let open = s_trim.find('(').ok_or_else(|| bad("expected NAME(ARGS)"))?;
        if !s_trim.ends_with(')') {
            return Err(bad("missing closing `)`"));
        }
        let name = s_trim[..open].trim();
        let args = &s_trim[open + 1..s_trim.len() - 1];
        match name {
            "saddle" => {
                let parts: Vec<&str> = args.split(',').map(str::trim).collect();
                if parts.len() != 2 {
                    return Err(bad("saddle takes two rates: saddle(lambda,mu)"));
                }
                let num = |p: &str| p.parse::<f64>().map_err(|_| bad("rates must be numbers"));
                let (lambda, mu) = (num(parts[0])?, num(parts[1])?);
                SaddleParams::new(lambda, mu)?;
                Ok(FieldSpec::Saddle { lambda, mu })
            }
            "separable" => {
                if args.trim().is_empty() {
                    return Err(bad("separable needs an expression f(x)"));
                }
                Ok(FieldSpec::Separable(args.trim().to_string()))
            }
            "custom" => {
                let split = top_level_comma(args).ok_or_else(|| bad("custom takes two expressions: custom(DX,DY)"))?;
                Ok(FieldSpec::Custom {
                    dx: args[..split].trim().to_string(),
                    dy: args[split + 1..].trim().to_string(),
                })
            }
            _ => Err(bad("unknown field name (expected saddle, separable or custom)")),
        }
    }
}

fn top_level_comma(s: &str) -> Option<usize> {
    let mut depth = 0i32;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => return Some(i),
            _ => {}
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn saddle(l: f64, m: f64) -> VectorField {
        VectorField::linear_saddle(SaddleParams::new(l, m).unwrap())
    }

    #[test]
    fn saddle_velocity() {
        assert_eq!(saddle(1.0, 1.0).velocity(2.0, 3.0, 0.0), [2.0, -3.0]);
        assert_eq!(saddle(1.0, 2.0).velocity(0.0, 0.0, 0.0), [0.0, -0.0]);
        assert_eq!(saddle(2.0, 1.0).velocity(1.0, 1.0, 0.0), [2.0, -1.0]);
        assert!(saddle(2.0, 1.0).is_autonomous());
    }

    #[test]
    fn rejects_bad_rates() {
        assert!(SaddleParams::new(0.0, 1.0).is_err());
        assert!(SaddleParams::new(1.0, -2.0).is_err());
        assert!(SaddleParams::new(f64::NAN, 1.0).is_err());
        assert!(SaddleParams::new(f64::INFINITY, 1.0).is_err());
    }

    #[test]
    fn separable_identity_is_unit_saddle() {
        let f = VectorField::separable_incompressible(Expr::parse("x").unwrap()).unwrap();
        let s = saddle(1.0, 1.0);
        for &(x, y) in &[(0.3, -0.7), (1.5, 2.0), (-1.0, 0.25)] {
            assert_eq!(f.velocity(x, y, 0.0), s.velocity(x, y, 0.0));
        }
    }

    #[test]
    fn separable_sine_has_zero_divergence() {
        let f = VectorField::separable_incompressible(Expr::parse("sin(x)").unwrap()).unwrap();
        for k in 0..20 {
            let x = -2.0 + 0.2 * k as f64;
            let y = 1.0 - 0.1 * k as f64;
            let [u, v] = f.velocity(x, y, 0.0);
            assert_eq!(u, x.sin());
            assert!((v + y * x.cos()).abs() < 1e-15);
            assert!(f.divergence_fd(x, y, 0.0, 1e-5).abs() < 1e-8);
        }
    }

    #[test]
    fn separable_rejects_y_and_t() {
        assert!(VectorField::separable_incompressible(Expr::parse("x*y").unwrap()).is_err());
        assert!(VectorField::separable_incompressible(Expr::parse("sin(t)").unwrap()).is_err());
    }

    #[test]
    fn expression_fields() {
        let zero = VectorField::from_expressions(Expr::Const(0.0), Expr::Const(0.0));
        assert_eq!(zero.velocity(1.0, 2.0, 3.0), [0.0, 0.0]);

        let rot =
            VectorField::from_expressions(Expr::parse("-y").unwrap(), Expr::parse("x").unwrap());
        let [u, v] = rot.velocity(3.0, 4.0, 0.0);
        assert_eq!((u * u + v * v).sqrt(), 5.0);

        let forced =
            VectorField::from_expressions(Expr::parse("sin(t)").unwrap(), Expr::parse("x").unwrap());
        assert!(!forced.is_autonomous());
    }

    #[test]
    fn registry_strings() {
        let spec: FieldSpec = "saddle(1, 2)".parse().unwrap();
        assert_eq!(spec, FieldSpec::Saddle { lambda: 1.0, mu: 2.0 });
        assert_eq!(spec.build().unwrap().saddle_params().unwrap().mu(), 2.0);

        let spec: FieldSpec = "separable(tanh(x))".parse().unwrap();
        assert_eq!(spec, FieldSpec::Separable("tanh(x)".into()));

        let spec: FieldSpec = "custom(sin(x)*y, -(x+y))".parse().unwrap();
        assert_eq!(
            spec,
            FieldSpec::Custom {
                dx: "sin(x)*y".into(),
                dy: "-(x+y)".into()
            }
        );
        let round: FieldSpec = spec.to_string().parse().unwrap();
        assert_eq!(round, spec);

        for bad in ["saddle(1)", "saddle(-1,1)", "vortex(1)", "custom(x)", "saddle 1,2", "separable()"] {
            assert!(bad.parse::<FieldSpec>().is_err(), "{bad}");
        }
        assert!(matches!(
            FieldSpec::Custom { dx: "x+".into(), dy: "y".into() }.build(),
            Err(FieldError::Parse { component: "dx", .. })
        ));
    }
}
