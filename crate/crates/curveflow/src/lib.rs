//! Evolution of closed plane curves under a curvature-dependent normal
//! velocity with curvature adjusted tangential redistribution of grid points.
//!
//! The engine evolves an N-sided closed polygon by a semi-implicit flowing
//! finite volume scheme. The normal speed has the form
//! `beta = w(x, nu, k) * k + F(x, nu)`; the tangential speed `alpha` is
//! chosen so that grid density tracks a shape function `phi(k)` of the
//! curvature, which concentrates points where the curve bends sharply.
//!
//! Module map:
//! - [`geometry`]: discrete quantities of a closed polygon (edge lengths,
//!   lifted tangent angles, dual volumes, curvature, area).
//! - [`flowlaw`]: the normal velocity laws, including all built-ins used by
//!   the experiment harness.
//! - [`redistribution`]: shape functions and the tangential velocity solve.
//! - [`stepper`]: one semi-implicit step (cyclic tridiagonal solve), adaptive
//!   time stepping and full evolutions with stopping rules.
//! - [`staticopt`]: optimal placement of N points on a fixed smooth curve and
//!   length/area defect diagnostics.
//! - [`harness`]: exact self-similar solutions, error norms, convergence
//!   order and discrepancy tables.
//! - [`segmentation`]: image-driven flow laws (geodesic and sharp forcing).

pub mod flowlaw;
pub mod geometry;
pub mod harness;
pub mod redistribution;
pub mod segmentation;
pub mod staticopt;
pub mod stepper;

pub use flowlaw::{make_builtin, FlowLaw, LawError, PowerRegularization};
pub use geometry::{enclosed_area, derive_geometry, CurveGeometry, GeometryError, PolygonalCurve, Vec2};
pub use redistribution::{RedistError, RedistParams, ShapeSpec};
pub use stepper::{evolve, step, StepControl, StepError, StopMode, StopRule, TimeStepMode, Trajectory};
