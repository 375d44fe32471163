//! Lagrangian descriptors for planar vector fields.
//!
//! The descriptor `M(x0, t0, tau)` is the arclength of the trajectory
//! through `x0` over `[t0 - tau, t0 + tau]`. Stable and unstable manifolds
//! of hyperbolic trajectories appear where the partial derivatives
//! `dM/dx0` and `dM/dy0` change sign, which [`analyze`] extracts from a
//! gridded field.
//!
//! ```
//! use lagdesc::prelude::*;
//!
//! let field = VectorField::linear_saddle(SaddleParams::new(1.0, 2.0).unwrap());
//! let grid = GridSpec::square(-1.0, 1.0, 21).unwrap();
//! let cfg = IntegratorConfig::default_for_tau(10.0);
//! let m = compute_field(&field, &grid, 0.0, 10.0, &cfg).unwrap();
//! let dx = partial_derivative(&m, Axis::X).unwrap();
//! let dy = partial_derivative(&m, Axis::Y).unwrap();
//! let mask = detect_manifolds(&dx, &dy, 0.0).unwrap();
//! assert_eq!(mask.row_coverage(0.0, grid.hx()), 1.0);
//! ```

pub mod analyze;
pub mod expr;
pub mod fields;
pub mod integrate;
pub mod io;
pub mod ldfield;
pub mod reference;

pub mod prelude {
    pub use crate::analyze::{detect_manifolds, partial_derivative, Axis, Crossing, DerivativeField, ManifoldMask};
    pub use crate::expr::{Expr, Var};
    pub use crate::fields::{FieldSpec, SaddleParams, VectorField};
    pub use crate::integrate::{compute_m, integrate_arclength, Direction, IntegratorConfig, Method};
    pub use crate::ldfield::{compute_field, GridSpec, ScalarField};
    pub use crate::reference::AnalyticSaddleFlow;
}
