//! Argument handling and orchestration behind the `ldmap` binary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::Parser;
use lagdesc::analyze::{detect_manifolds, partial_derivative, Axis};
use lagdesc::fields::FieldSpec;
use lagdesc::integrate::{compute_m, IntegratorConfig, Method};
use lagdesc::io::{write_csv, write_mask_csv, write_pgm};
use lagdesc::ldfield::{compute_field, GridSpec};
use lagdesc::reference::AnalyticSaddleFlow;
use thiserror::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_NO_VALID: u8 = 3;
pub const EXIT_IO: u8 = 4;

const DEFAULT_GRID: &str = "-1:1:201,-1:1:201";
const DEFAULT_TAU: f64 = 10.0;

/// Compute a Lagrangian descriptor map over a grid of initial conditions
/// and locate the sign changes of its partial derivatives.
#[derive(Debug, Parser, Default)]
#[command(name = "ldmap", version, about)]
pub struct Args {
    /// Field: `saddle(L,M)`, `separable(EXPR)` or `custom(DX,DY)`.
    #[arg(long)]
    pub field: Option<String>,
    /// x-component expression (use together with --dy).
    #[arg(long, allow_hyphen_values = true)]
    pub dx: Option<String>,
    /// y-component expression (use together with --dx).
    #[arg(long, allow_hyphen_values = true)]
    pub dy: Option<String>,
    /// Grid as XMIN:XMAX:NX,YMIN:YMAX:NY [default: -1:1:201,-1:1:201].
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// Reference time [default: 0].
    #[arg(long, allow_hyphen_values = true)]
    pub t0: Option<f64>,
    /// Half-width of the integration window [default: 10].
    #[arg(long, allow_hyphen_values = true)]
    pub tau: Option<f64>,
    /// Integrator: rk4 (fixed step) or rk45 (adaptive) [default: rk4].
    #[arg(long)]
    pub method: Option<String>,
    /// RK4 step [default: tau/4000].
    #[arg(long, allow_hyphen_values = true)]
    pub step: Option<f64>,
    /// RK45 relative tolerance [default: 1e-8].
    #[arg(long, allow_hyphen_values = true)]
    pub rtol: Option<f64>,
    /// RK45 absolute tolerance [default: 1e-10].
    #[arg(long, allow_hyphen_values = true)]
    pub atol: Option<f64>,
    /// Named parameter set: fig1, fig2, fig3a, fig3b, fig3c, fig3d.
    #[arg(long)]
    pub preset: Option<String>,
    /// Write M as CSV.
    #[arg(long)]
    pub out_m: Option<PathBuf>,
    /// Write dM/dx0 as CSV.
    #[arg(long)]
    pub out_dx: Option<PathBuf>,
    /// Write dM/dy0 as CSV.
    #[arg(long)]
    pub out_dy: Option<PathBuf>,
    /// Write detected crossings as CSV.
    #[arg(long)]
    pub out_mask: Option<PathBuf>,
    /// Write M as a binary greyscale PGM.
    #[arg(long)]
    pub pgm: Option<PathBuf>,
    /// Print the quadrature value of M at X,Y for a linear saddle and exit.
    #[arg(long, allow_hyphen_values = true)]
    pub oracle: Option<String>,
    /// Drop crossings whose jump is below this quantile of their set [default: 0].
    #[arg(long)]
    pub quantile: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub field: &'static str,
    pub tau: f64,
}

/// `fig2` uses `f = tanh(x)` in place of the unspecified separable field.
pub const PRESETS: [Preset; 6] = [
    Preset { name: "fig1", field: "saddle(1,1)", tau: 20.0 },
    Preset { name: "fig2", field: "separable(tanh(x))", tau: 10.0 },
    Preset { name: "fig3a", field: "saddle(1,2)", tau: 10.0 },
    Preset { name: "fig3b", field: "saddle(1,2)", tau: 10.0 },
    Preset { name: "fig3c", field: "saddle(2,1)", tau: 10.0 },
    Preset { name: "fig3d", field: "saddle(2,1)", tau: 10.0 },
];

pub fn preset(name: &str) -> Option<Preset> {
    PRESETS.iter().copied().find(|p| p.name == name)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outputs {
    pub m: Option<PathBuf>,
    pub dx: Option<PathBuf>,
    pub dy: Option<PathBuf>,
    pub mask: Option<PathBuf>,
    pub pgm: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub field: FieldSpec,
    pub grid: GridSpec,
    pub t0: f64,
    pub tau: f64,
    pub integrator: IntegratorConfig,
    pub quantile: f64,
    pub outputs: Outputs,
    pub oracle: Option<[f64; 2]>,
    pub preset: Option<String>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("no valid nodes: every trajectory escaped or produced a non-finite value")]
    NoValidNodes,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::NoValidNodes => EXIT_NO_VALID,
            CliError::Io { .. } => EXIT_IO,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Parses `XMIN:XMAX:NX,YMIN:YMAX:NY`.
pub fn parse_grid(s: &str) -> Result<GridSpec, CliError> {
    let bad = || usage(format!("malformed grid `{s}`; expected XMIN:XMAX:NX,YMIN:YMAX:NY"));
    let axes: Vec<&str> = s.split(',').collect();
    if axes.len() != 2 {
        return Err(bad());
    }
    let axis = |a: &str| -> Result<(f64, f64, usize), CliError> {
        let parts: Vec<&str> = a.split(':').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo = parts[0].parse().map_err(|_| bad())?;
        let hi = parts[1].parse().map_err(|_| bad())?;
        let n = parts[2].parse().map_err(|_| bad())?;
        Ok((lo, hi, n))
    };
    GridSpec::new(axis(axes[0])?, axis(axes[1])?).map_err(|e| usage(format!("grid: {e}")))
}

fn parse_point(s: &str) -> Result<[f64; 2], CliError> {
    let bad = || usage(format!("malformed point `{s}`; expected X,Y"));
    let (x, y) = s.split_once(',').ok_or_else(bad)?;
    Ok([
        x.trim().parse().map_err(|_| bad())?,
        y.trim().parse().map_err(|_| bad())?,
    ])
}

impl Args {
    /// Expands the preset, applies explicit flags over it and validates.
    pub fn into_config(self) -> Result<RunConfig, CliError> {
        let preset = match &self.preset {
            Some(name) => Some(preset(name).ok_or_else(|| {
                let names: Vec<&str> = PRESETS.iter().map(|p| p.name).collect();
                usage(format!("unknown preset `{name}` (available: {})", names.join(", ")))
            })?),
            None => None,
        };

        let field_src = match (&self.field, &self.dx, &self.dy) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                return Err(usage("give either --field or --dx/--dy, not both"))
            }
            (Some(f), None, None) => f.clone(),
            (None, Some(dx), Some(dy)) => format!("custom({dx},{dy})"),
            (None, Some(_), None) | (None, None, Some(_)) => {
                return Err(usage("--dx and --dy must be given together"))
            }
            (None, None, None) => match preset {
                Some(p) => p.field.to_string(),
                None => return Err(usage("missing field: use --field, --dx/--dy or --preset")),
            },
        };
        let field = FieldSpec::from_str(&field_src).map_err(|e| usage(e.to_string()))?;
        field.build().map_err(|e| usage(e.to_string()))?;

        let grid = parse_grid(self.grid.as_deref().unwrap_or(DEFAULT_GRID))?;
        let t0 = self.t0.unwrap_or(0.0);
        if !t0.is_finite() {
            return Err(usage(format!("--t0 must be finite, got {t0}")));
        }
        let tau = self.tau.or(preset.map(|p| p.tau)).unwrap_or(DEFAULT_TAU);
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(usage(format!("--tau must be finite and non-negative, got {tau}")));
        }

        let mut integrator = IntegratorConfig::default_for_tau(tau);
        match self.method.as_deref().unwrap_or("rk4") {
            "rk4" => {
                if self.rtol.is_some() || self.atol.is_some() {
                    return Err(usage("--rtol/--atol apply to --method rk45"));
                }
                if let Some(h) = self.step {
                    integrator.step = h;
                }
            }
            "rk45" => {
                if self.step.is_some() {
                    return Err(usage("--step applies to --method rk4"));
                }
                integrator.method = Method::Rk45;
                integrator.rtol = self.rtol.unwrap_or(integrator.rtol);
                integrator.atol = self.atol.unwrap_or(integrator.atol);
            }
            other => return Err(usage(format!("unknown method `{other}` (rk4 or rk45)"))),
        }
        integrator.validate().map_err(|e| usage(e.to_string()))?;

        let quantile = self.quantile.unwrap_or(0.0);
        if !(0.0..=1.0).contains(&quantile) {
            return Err(usage(format!("--quantile must lie in [0, 1], got {quantile}")));
        }

        let outputs = Outputs {
            m: self.out_m,
            dx: self.out_dx,
            dy: self.out_dy,
            mask: self.out_mask,
            pgm: self.pgm,
        };
        if (outputs.dx.is_some() || outputs.dy.is_some() || outputs.mask.is_some())
            && (grid.nx < 3 || grid.ny < 3)
        {
            return Err(usage("derivative and mask outputs need at least 3 nodes per axis"));
        }

        let oracle = self.oracle.as_deref().map(parse_point).transpose()?;
        if oracle.is_some() && !matches!(field, FieldSpec::Saddle { .. }) {
            return Err(usage("--oracle is only available for saddle(L,M) fields"));
        }

        Ok(RunConfig {
            field,
            grid,
            t0,
            tau,
            integrator,
            quantile,
            outputs,
            oracle,
            preset: self.preset,
        })
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Runs the configured computation, writes the requested files and returns
/// the summary text.
pub fn run(cfg: &RunConfig) -> Result<String, CliError> {
    let field = cfg.field.build().map_err(|e| usage(e.to_string()))?;
    let mut out = String::new();

    if let Some(p) = cfg.oracle {
        let FieldSpec::Saddle { lambda, mu } = cfg.field else {
            return Err(usage("--oracle is only available for saddle(L,M) fields"));
        };
        let exact = AnalyticSaddleFlow::new(lambda, mu)
            .oracle_m(p, cfg.tau, 1e-12)
            .map_err(|e| usage(format!("oracle: {e}")))?;
        let numeric = compute_m(&field, p, cfg.t0, cfg.tau, &cfg.integrator);
        let _ = writeln!(out, "point       {},{}", p[0], p[1]);
        let _ = writeln!(out, "oracle_M    {exact:.17e}");
        let _ = writeln!(out, "numeric_M   {:.17e}", numeric.value);
        let _ = writeln!(out, "rel_error   {:.3e}", (numeric.value - exact).abs() / exact.abs());
        return Ok(out);
    }

    let start = Instant::now();
    let m = compute_field(&field, &cfg.grid, cfg.t0, cfg.tau, &cfg.integrator)
        .map_err(|e| usage(e.to_string()))?;
    let valid = m.valid_count();
    if valid == 0 {
        return Err(CliError::NoValidNodes);
    }
    let derivatives = if cfg.grid.nx >= 3 && cfg.grid.ny >= 3 {
        let dx = partial_derivative(&m, Axis::X).map_err(|e| usage(e.to_string()))?;
        let dy = partial_derivative(&m, Axis::Y).map_err(|e| usage(e.to_string()))?;
        let mask = detect_manifolds(&dx, &dy, cfg.quantile).map_err(|e| usage(e.to_string()))?;
        Some((dx, dy, mask))
    } else {
        None
    };
    let elapsed = start.elapsed().as_secs_f64();

    if let Some(path) = &cfg.outputs.m {
        write_file(path, &write_csv(&m))?;
    }
    if let Some(path) = &cfg.outputs.pgm {
        let bytes = write_pgm(&m).map_err(|_| CliError::NoValidNodes)?;
        write_file(path, &bytes)?;
    }
    if let Some((dx, dy, mask)) = &derivatives {
        if let Some(path) = &cfg.outputs.dx {
            write_file(path, &write_csv(&dx.field))?;
        }
        if let Some(path) = &cfg.outputs.dy {
            write_file(path, &write_csv(&dy.field))?;
        }
        if let Some(path) = &cfg.outputs.mask {
            write_file(path, &write_mask_csv(mask))?;
        }
    }

    let g = cfg.grid;
    let _ = writeln!(out, "field       {}", field.name());
    if let Some(p) = &cfg.preset {
        let _ = writeln!(out, "preset      {p}");
    }
    let _ = writeln!(
        out,
        "grid        {}x{} on [{}, {}] x [{}, {}]",
        g.nx, g.ny, g.xmin, g.xmax, g.ymin, g.ymax
    );
    let _ = writeln!(out, "t0, tau     {}, {}", cfg.t0, cfg.tau);
    let _ = writeln!(
        out,
        "valid       {valid}/{} ({:.2}%)",
        g.len(),
        100.0 * valid as f64 / g.len() as f64
    );
    if let Some((lo, hi)) = m.valid_range() {
        let _ = writeln!(out, "M range     [{lo:.6e}, {hi:.6e}]");
    }
    if let Some((_, _, mask)) = &derivatives {
        let _ = writeln!(out, "crossings   {} in dM/dx0, {} in dM/dy0", mask.x_crossings.len(), mask.y_crossings.len());
    }
    let _ = writeln!(out, "wall time   {elapsed:.3} s");
    Ok(out)
}
