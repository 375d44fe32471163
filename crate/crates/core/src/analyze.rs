//! Partial derivatives of descriptor fields and sign-change detection.
//!
//! Invariant manifolds show up where a partial derivative of `M` changes
//! sign: zeros of `dM/dx0` along x-lines trace the stable manifold of the
//! saddles considered here, zeros of `dM/dy0` along y-lines the unstable
//! one. For general fields both sets are reported as candidates only.

use thiserror::Error;

use crate::ldfield::{GridSpec, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

#[derive(Debug, Error, PartialEq)]
pub enum AnalyzeError {
    #[error("need at least 3 nodes along the {axis:?} axis, got {nodes}")]
    TooFewNodes { axis: Axis, nodes: usize },
    #[error("derivative fields are defined on different grids")]
    GridMismatch,
    #[error("expected derivative along {expected:?}, got {got:?}")]
    WrongAxis { expected: Axis, got: Axis },
    #[error("jump quantile must lie in [0, 1), got {0}")]
    Quantile(f64),
}

/// A [`ScalarField`] holding a partial derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeField {
    pub field: ScalarField,
    pub axis: Axis,
    pub spacing: f64,
}

/// Central differences in the interior, first-order one-sided differences
/// on the boundary. A node is valid only if every node its stencil reads
/// is valid.
pub fn partial_derivative(field: &ScalarField, axis: Axis) -> Result<DerivativeField, AnalyzeError> {
    let g = field.grid;
    let (n, h) = match axis {
        Axis::X => (g.nx, g.hx()),
        Axis::Y => (g.ny, g.hy()),
    };
    if n < 3 {
        return Err(AnalyzeError::TooFewNodes { axis, nodes: n });
    }
    let idx = |along: usize, across: usize| match axis {
        Axis::X => g.index(along, across),
        Axis::Y => g.index(across, along),
    };
    let lines = match axis {
        Axis::X => g.ny,
        Axis::Y => g.nx,
    };
    let mut values = vec![0.0; g.len()];
    let mut valid = vec![false; g.len()];
    for line in 0..lines {
        for k in 0..n {
            let (lo, hi, width) = if k == 0 {
                (0, 1, h)
            } else if k == n - 1 {
                (n - 2, n - 1, h)
            } else {
                (k - 1, k + 1, 2.0 * h)
            };
            let (a, b) = (idx(lo, line), idx(hi, line));
            let out = idx(k, line);
            valid[out] = field.valid[a] && field.valid[b];
            values[out] = if valid[out] {
                (field.values[b] - field.values[a]) / width
            } else {
                f64::NAN
            };
        }
    }
    Ok(DerivativeField {
        field: ScalarField {
            grid: g,
            values,
            valid,
            meta: field.meta.clone(),
        },
        axis,
        spacing: h,
    })
}

/// A sign change of a derivative on the grid edge starting at node
/// `(i, j)`: `(i, j)-(i+1, j)` for x-crossings, `(i, j)-(i, j+1)` for
/// y-crossings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub i: usize,
    pub j: usize,
    /// Location of the zero, linearly interpolated along the edge.
    pub x: f64,
    pub y: f64,
    /// Magnitude of the derivative jump across the crossing.
    pub jump: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldMask {
    pub grid: GridSpec,
    /// Zeros of `dM/dx0` along x-lines (stable-manifold candidates).
    pub x_crossings: Vec<Crossing>,
    /// Zeros of `dM/dy0` along y-lines (unstable-manifold candidates).
    pub y_crossings: Vec<Crossing>,
}

impl ManifoldMask {
    pub fn is_empty(&self) -> bool {
        self.x_crossings.is_empty() && self.y_crossings.is_empty()
    }

    /// Fraction of rows holding at least one x-crossing with
    /// `|x - target| <= tol`.
    pub fn row_coverage(&self, target: f64, tol: f64) -> f64 {
        let mut hit = vec![false; self.grid.ny];
        for c in &self.x_crossings {
            if (c.x - target).abs() <= tol {
                hit[c.j] = true;
            }
        }
        hit.iter().filter(|&&h| h).count() as f64 / self.grid.ny as f64
    }

    /// Fraction of columns holding at least one y-crossing with
    /// `|y - target| <= tol`.
    pub fn column_coverage(&self, target: f64, tol: f64) -> f64 {
        let mut hit = vec![false; self.grid.nx];
        for c in &self.y_crossings {
            if (c.y - target).abs() <= tol {
                hit[c.i] = true;
            }
        }
        hit.iter().filter(|&&h| h).count() as f64 / self.grid.nx as f64
    }

    /// Fraction of x-crossings within `tol` of `x = target`; 1 when empty.
    pub fn x_precision(&self, target: f64, tol: f64) -> f64 {
        fraction(&self.x_crossings, |c| (c.x - target).abs() <= tol)
    }

    pub fn y_precision(&self, target: f64, tol: f64) -> f64 {
        fraction(&self.y_crossings, |c| (c.y - target).abs() <= tol)
    }
}

fn fraction(cs: &[Crossing], pred: impl Fn(&Crossing) -> bool) -> f64 {
    if cs.is_empty() {
        return 1.0;
    }
    cs.iter().filter(|c| pred(c)).count() as f64 / cs.len() as f64
}

/// Sign changes of a sequence of (value, valid) samples at positions
/// `pos(k)`. Returns `(k, position, jump)` for the edge `k -> k+1`.
///
/// A strict sign change is located by linear interpolation. An exact zero
/// counts as one crossing at the zero node, attributed to the edge that
/// enters it from a nonzero neighbour (or to edge 0 for a zero at the
/// first node).
fn line_crossings(
    vals: &[f64],
    ok: &[bool],
    pos: impl Fn(usize) -> f64,
    mut emit: impl FnMut(usize, f64, f64),
) {
    let n = vals.len();
    for k in 0..n.saturating_sub(1) {
        if !(ok[k] && ok[k + 1]) {
            continue;
        }
        let (a, b) = (vals[k], vals[k + 1]);
        if a * b < 0.0 {
            let frac = a / (a - b);
            let p = pos(k) + (pos(k + 1) - pos(k)) * frac;
            emit(k, p, (a - b).abs());
        } else if b == 0.0 && a != 0.0 {
            let jump = match vals.get(k + 2) {
                Some(&c) if ok[k + 2] => (c - a).abs(),
                _ => a.abs(),
            };
            emit(k, pos(k + 1), jump);
        } else if k == 0 && a == 0.0 && b != 0.0 {
            emit(k, pos(0), b.abs());
        }
    }
}

fn quantile(mut xs: Vec<f64>, q: f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let r = q * (xs.len() - 1) as f64;
    let lo = r.floor() as usize;
    let hi = r.ceil() as usize;
    xs[lo] + (xs[hi] - xs[lo]) * (r - lo as f64)
}

fn filter_by_quantile(cs: &mut Vec<Crossing>, q: f64) {
    if q <= 0.0 || cs.is_empty() {
        return;
    }
    let threshold = quantile(cs.iter().map(|c| c.jump).collect(), q);
    cs.retain(|c| c.jump >= threshold);
}

/// Collects sign changes of `dM/dx0` along rows and of `dM/dy0` along
/// columns. Crossings whose jump magnitude falls below the
/// `min_jump_quantile` quantile of their set are dropped.
pub fn detect_manifolds(
    dmdx: &DerivativeField,
    dmdy: &DerivativeField,
    min_jump_quantile: f64,
) -> Result<ManifoldMask, AnalyzeError> {
    if dmdx.axis != Axis::X {
        return Err(AnalyzeError::WrongAxis {
            expected: Axis::X,
            got: dmdx.axis,
        });
    }
    if dmdy.axis != Axis::Y {
        return Err(AnalyzeError::WrongAxis {
            expected: Axis::Y,
            got: dmdy.axis,
        });
    }
    if dmdx.field.grid != dmdy.field.grid {
        return Err(AnalyzeError::GridMismatch);
    }
    if !(0.0..1.0).contains(&min_jump_quantile) {
        return Err(AnalyzeError::Quantile(min_jump_quantile));
    }
    let g = dmdx.field.grid;

    let mut x_crossings = Vec::new();
    for j in 0..g.ny {
        let row = g.index(0, j)..g.index(0, j) + g.nx;
        let y = g.y(j);
        line_crossings(
            &dmdx.field.values[row.clone()],
            &dmdx.field.valid[row],
            |k| g.x(k),
            |i, x, jump| x_crossings.push(Crossing { i, j, x, y, jump }),
        );
    }

    let mut y_crossings = Vec::new();
    let mut col_vals = vec![0.0; g.ny];
    let mut col_ok = vec![false; g.ny];
    for i in 0..g.nx {
        for j in 0..g.ny {
            col_vals[j] = dmdy.field.values[g.index(i, j)];
            col_ok[j] = dmdy.field.valid[g.index(i, j)];
        }
        let x = g.x(i);
        line_crossings(&col_vals, &col_ok, |k| g.y(k), |j, y, jump| {
            y_crossings.push(Crossing { i, j, x, y, jump })
        });
    }

    filter_by_quantile(&mut x_crossings, min_jump_quantile);
    filter_by_quantile(&mut y_crossings, min_jump_quantile);
    Ok(ManifoldMask {
        grid: g,
        x_crossings,
        y_crossings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> GridSpec {
        GridSpec::square(-1.0, 1.0, n).unwrap()
    }

    #[test]
    fn constant_field_has_zero_derivative_and_empty_mask() {
        let f = ScalarField::from_fn(grid(9), |_, _| 4.2);
        let dx = partial_derivative(&f, Axis::X).unwrap();
        let dy = partial_derivative(&f, Axis::Y).unwrap();
        assert!(dx.field.values.iter().all(|&v| v == 0.0));
        let mask = detect_manifolds(&dx, &dy, 0.0).unwrap();
        assert!(mask.is_empty());
    }

    #[test]
    fn central_differences_are_exact_on_quadratics() {
        let g = grid(21);
        let f = ScalarField::from_fn(g, |x, y| x * x + 3.0 * y);
        let dx = partial_derivative(&f, Axis::X).unwrap();
        let dy = partial_derivative(&f, Axis::Y).unwrap();
        for j in 0..g.ny {
            for i in 1..g.nx - 1 {
                assert!((dx.field.at(i, j) - 2.0 * g.x(i)).abs() < 1e-12);
            }
            for i in 0..g.nx {
                assert!((dy.field.at(i, j) - 3.0).abs() < 1e-12);
            }
        }
        // one-sided at the boundary: slope of the first chord
        let expect = (g.x(1).powi(2) - g.x(0).powi(2)) / g.hx();
        assert!((dx.field.at(0, 0) - expect).abs() < 1e-12);
    }

    #[test]
    fn invalid_nodes_poison_their_stencils() {
        let g = grid(5);
        let mut f = ScalarField::from_fn(g, |x, _| x);
        let bad = g.index(2, 2);
        f.valid[bad] = false;
        let dx = partial_derivative(&f, Axis::X).unwrap();
        assert!(!dx.field.is_valid(1, 2));
        assert!(!dx.field.is_valid(3, 2));
        assert!(dx.field.is_valid(2, 2));
        assert!(dx.field.is_valid(0, 2));
        let dy = partial_derivative(&f, Axis::Y).unwrap();
        assert!(!dy.field.is_valid(2, 1));
        assert!(!dy.field.is_valid(2, 3));
    }

    #[test]
    fn too_few_nodes() {
        let g = GridSpec::new((-1.0, 1.0, 2), (-1.0, 1.0, 5)).unwrap();
        let f = ScalarField::from_fn(g, |x, _| x);
        assert!(matches!(
            partial_derivative(&f, Axis::X),
            Err(AnalyzeError::TooFewNodes { nodes: 2, .. })
        ));
        assert!(partial_derivative(&f, Axis::Y).is_ok());
    }

    #[test]
    fn abs_like_field_crosses_on_axes() {
        let g = grid(11);
        let f = ScalarField::from_fn(g, |x, y| x.abs() + 2.0 * y.abs());
        let dx = partial_derivative(&f, Axis::X).unwrap();
        let dy = partial_derivative(&f, Axis::Y).unwrap();
        let mask = detect_manifolds(&dx, &dy, 0.0).unwrap();
        assert_eq!(mask.x_crossings.len(), g.ny);
        assert_eq!(mask.y_crossings.len(), g.nx);
        assert!(mask.x_crossings.iter().all(|c| c.x == 0.0 && c.i == 4));
        assert!(mask.y_crossings.iter().all(|c| c.y == 0.0 && c.j == 4));
        assert_eq!(mask.row_coverage(0.0, g.hx()), 1.0);
        assert_eq!(mask.column_coverage(0.0, g.hy()), 1.0);
        assert!((mask.x_crossings[0].jump - 2.0).abs() < 1e-12);
    }

    #[test]
    fn interpolated_crossing_position() {
        let g = GridSpec::new((0.0, 3.0, 4), (0.0, 1.0, 3)).unwrap();
        // derivative values along a row: -1, -1, 3, 3 -> zero at 1.25
        let mut vals = Vec::new();
        line_crossings(
            &[-1.0, -1.0, 3.0, 3.0],
            &[true; 4],
            |k| g.x(k),
            |k, p, jump| vals.push((k, p, jump)),
        );
        assert_eq!(vals, vec![(1, 1.25, 4.0)]);
    }

    #[test]
    fn quantile_filter_keeps_large_jumps() {
        let g = grid(5);
        let dummy = ScalarField::from_fn(g, |_, _| 0.0);
        let mut dx = partial_derivative(&dummy, Axis::X).unwrap();
        // rows with increasing jump size
        for j in 0..g.ny {
            let s = (j + 1) as f64;
            for i in 0..g.nx {
                dx.field.values[g.index(i, j)] = if i < 2 { -s } else { s };
            }
        }
        let dy = partial_derivative(&dummy, Axis::Y).unwrap();
        let all = detect_manifolds(&dx, &dy, 0.0).unwrap();
        assert_eq!(all.x_crossings.len(), 5);
        let top = detect_manifolds(&dx, &dy, 0.5).unwrap();
        assert_eq!(top.x_crossings.len(), 3);
        assert!(top.x_crossings.iter().all(|c| c.jump >= 6.0));
        assert!(detect_manifolds(&dx, &dy, 1.0).is_err());
        assert!(detect_manifolds(&dy, &dx, 0.0).is_err());
    }
}
