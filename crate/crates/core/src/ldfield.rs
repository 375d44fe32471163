//! Descriptor values over rectangular grids of initial conditions.
//!
//! Storage is row-major with `y` varying slowest: node `(i, j)` (column
//! `i` along x, row `j` along y) lives at index `j * nx + i`. Row `j = 0`
//! is `y = ymin`.

use thiserror::Error;

use crate::fields::VectorField;
use crate::integrate::{compute_m_batch, ConfigError, Descriptor, IntegratorConfig};

// Initial conditions integrated together; see `compute_m_batch`.
const NODES_PER_BATCH: usize = 4;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("bounds must be finite with min < max (x: [{xmin}, {xmax}], y: [{ymin}, {ymax}])")]
    Bounds {
        xmin: f64,
        xmax: f64,
        ymin: f64,
        ymax: f64,
    },
    #[error("each axis needs at least 2 nodes (nx = {nx}, ny = {ny})")]
    Resolution { nx: usize, ny: usize },
}

#[derive(Debug, Error)]
pub enum FieldComputeError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("tau must be finite and non-negative, got {0}")]
    Tau(f64),
    #[error("t0 must be finite, got {0}")]
    T0(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn new(
        (xmin, xmax, nx): (f64, f64, usize),
        (ymin, ymax, ny): (f64, f64, usize),
    ) -> Result<Self, GridError> {
        let g = GridSpec {
            xmin,
            xmax,
            ymin,
            ymax,
            nx,
            ny,
        };
        g.validate()?;
        Ok(g)
    }

    /// `n x n` nodes on `[lo, hi]^2`.
    pub fn square(lo: f64, hi: f64, n: usize) -> Result<Self, GridError> {
        Self::new((lo, hi, n), (lo, hi, n))
    }

    pub fn validate(&self) -> Result<(), GridError> {
        let ok = |a: f64, b: f64| a.is_finite() && b.is_finite() && a < b;
        if !ok(self.xmin, self.xmax) || !ok(self.ymin, self.ymax) {
            return Err(GridError::Bounds {
                xmin: self.xmin,
                xmax: self.xmax,
                ymin: self.ymin,
                ymax: self.ymax,
            });
        }
        if self.nx < 2 || self.ny < 2 {
            return Err(GridError::Resolution {
                nx: self.nx,
                ny: self.ny,
            });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn hx(&self) -> f64 {
        (self.xmax - self.xmin) / (self.nx - 1) as f64
    }

    pub fn hy(&self) -> f64 {
        (self.ymax - self.ymin) / (self.ny - 1) as f64
    }

    /// Abscissa of column `i`. Written as a weighted mean of the bounds so
    /// that grids symmetric about zero have exactly mirrored nodes.
    pub fn x(&self, i: usize) -> f64 {
        lerp(self.xmin, self.xmax, i, self.nx)
    }

    pub fn y(&self, j: usize) -> f64 {
        lerp(self.ymin, self.ymax, j, self.ny)
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn node(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    pub fn point(&self, idx: usize) -> [f64; 2] {
        let (i, j) = self.node(idx);
        [self.x(i), self.y(j)]
    }
}

fn lerp(lo: f64, hi: f64, k: usize, n: usize) -> f64 {
    let last = (n - 1) as f64;
    (lo * (last - k as f64) + hi * k as f64) / last
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FieldMeta {
    pub field: String,
    pub t0: f64,
    pub tau: f64,
    pub config_hash: u64,
}

/// One value per grid node plus a validity flag.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    pub valid: Vec<bool>,
    pub meta: FieldMeta,
}

impl ScalarField {
    /// Fills the grid from a closure of `(x, y)`; non-finite values are
    /// marked invalid.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        let values: Vec<f64> = (0..grid.len())
            .map(|k| {
                let [x, y] = grid.point(k);
                f(x, y)
            })
            .collect();
        let valid = values.iter().map(|v| v.is_finite()).collect();
        ScalarField {
            grid,
            values,
            valid,
            meta: FieldMeta::default(),
        }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    #[inline]
    pub fn is_valid(&self, i: usize, j: usize) -> bool {
        self.valid[self.grid.index(i, j)]
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// Min and max over valid nodes.
    pub fn valid_range(&self) -> Option<(f64, f64)> {
        self.values
            .iter()
            .zip(&self.valid)
            .filter(|(_, &ok)| ok)
            .map(|(&v, _)| v)
            .fold(None, |acc, v| match acc {
                None => Some((v, v)),
                Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
            })
    }

    pub fn scaled(&self, c: f64) -> ScalarField {
        ScalarField {
            values: self.values.iter().map(|v| c * v).collect(),
            ..self.clone()
        }
    }

    /// Mirror image under `x -> -x` about the grid centre; only meaningful
    /// for grids symmetric in x.
    pub fn reflect_x(&self) -> ScalarField {
        let g = self.grid;
        let mut out = self.clone();
        for j in 0..g.ny {
            for i in 0..g.nx {
                let src = g.index(g.nx - 1 - i, j);
                let dst = g.index(i, j);
                out.values[dst] = self.values[src];
                out.valid[dst] = self.valid[src];
            }
        }
        out
    }
}

/// Evaluates the descriptor at every node. Nodes are independent; the
/// result does not depend on how many threads computed it.
pub fn compute_field(
    field: &VectorField,
    grid: &GridSpec,
    t0: f64,
    tau: f64,
    cfg: &IntegratorConfig,
) -> Result<ScalarField, FieldComputeError> {
    grid.validate()?;
    cfg.validate()?;
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(FieldComputeError::Tau(tau));
    }
    if !t0.is_finite() {
        return Err(FieldComputeError::T0(t0));
    }
    let chunk = |(c, out): (usize, &mut [(f64, bool)])| {
        let first = c * NODES_PER_BATCH;
        let points: Vec<[f64; 2]> = (first..first + out.len()).map(|k| grid.point(k)).collect();
        let mut ds = [Descriptor {
            value: 0.0,
            valid: false,
        }; NODES_PER_BATCH];
        compute_m_batch(field, &points, t0, tau, cfg, &mut ds[..out.len()]);
        for (o, d) in out.iter_mut().zip(&ds) {
            *o = (d.value, d.valid && d.value.is_finite());
        }
    };
    let mut results = vec![(0.0, false); grid.len()];
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        results
            .par_chunks_mut(NODES_PER_BATCH)
            .enumerate()
            .for_each(chunk);
    }
    #[cfg(not(feature = "parallel"))]
    results.chunks_mut(NODES_PER_BATCH).enumerate().for_each(chunk);

    let (values, valid) = results.into_iter().unzip();
    Ok(ScalarField {
        grid: *grid,
        values,
        valid,
        meta: FieldMeta {
            field: field.name().to_string(),
            t0,
            tau,
            config_hash: cfg.fingerprint(),
        },
    })
}
