//! Discrete geometry of closed polygonal curves.
//!
//! All per-edge and per-vertex quantities follow the flowing finite volume
//! layout: edge `i` (0-based) joins vertex `i-1` to vertex `i` (indices
//! cyclic), and the dual volume around vertex `i` spans the adjacent halves
//! of edges `i` and `i+1`. Tangent angles are lifted to a continuous branch
//! so that discrete curvature can be read off as an angle increment per unit
//! length; for a positively oriented simple polygon the lift gains exactly
//! `2*pi` over one loop.

use std::fmt;
use std::f64::consts::PI;

/// A plane vector / point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the cross product, `det(self, other)`.
    pub fn det(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        Vec2::new(self.x / n, self.y / n)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl std::ops::Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum GeometryError {
    /// Fewer than three vertices.
    TooFewVertices(usize),
    /// Two consecutive vertices coincide; edge index reported.
    ZeroLengthEdge(usize),
    /// Shoelace area is not positive; the engine requires counter-clockwise input.
    NegativeOrientation,
    /// Consecutive tangents are antipodal; the angle lift is ambiguous.
    DegenerateFold(usize),
    /// A tangent passed to the angle lift is not a unit vector.
    NotUnit(usize),
}

impl fmt::Display for GeometryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeometryError::TooFewVertices(n) => {
                write!(f, "polygonal curve needs at least 3 vertices, got {n}")
            }
            GeometryError::ZeroLengthEdge(i) => {
                write!(f, "edge {i} has zero length (coincident consecutive vertices)")
            }
            GeometryError::NegativeOrientation => {
                write!(f, "curve is not positively (counter-clockwise) oriented")
            }
            GeometryError::DegenerateFold(i) => {
                write!(f, "tangents at edge {i} are antipodal; angle lift ambiguous")
            }
            GeometryError::NotUnit(i) => write!(f, "tangent {i} is not a unit vector"),
        }
    }
}

impl std::error::Error for GeometryError {}

/// An ordered, closed, positively oriented list of N >= 3 vertices.
///
/// Vertex `i` corresponds to `x_{i+1}` in 1-based edge/vertex numbering, so
/// `x_0 = x_N` periodicity is implicit. Construction validates the type
/// invariants; the vertex list is immutable afterwards.
#[derive(Clone, Debug, PartialEq)]
pub struct PolygonalCurve {
    vertices: Vec<Vec2>,
}

impl PolygonalCurve {
    pub fn new(vertices: Vec<Vec2>) -> Result<Self, GeometryError> {
        let n = vertices.len();
        if n < 3 {
            return Err(GeometryError::TooFewVertices(n));
        }
        for i in 0..n {
            let prev = vertices[(i + n - 1) % n];
            let r = (vertices[i] - prev).norm();
            if !(r > 0.0) || !r.is_finite() {
                return Err(GeometryError::ZeroLengthEdge(i));
            }
        }
        if shoelace(&vertices) <= 0.0 {
            return Err(GeometryError::NegativeOrientation);
        }
        Ok(PolygonalCurve { vertices })
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

fn shoelace(vertices: &[Vec2]) -> f64 {
    let n = vertices.len();
    let mut twice_area = 0.0;
    for i in 0..n {
        twice_area += vertices[i].det(vertices[(i + 1) % n]);
    }
    0.5 * twice_area
}

/// Shoelace area enclosed by the curve; positive by the orientation invariant.
pub fn enclosed_area(curve: &PolygonalCurve) -> f64 {
    shoelace(curve.vertices())
}

/// All derived per-step quantities of a polygon.
///
/// `lifted_angles` holds `nu_0 .. nu_{N+2}` (length N+3) and `dual_angles`
/// holds `nu*_0 .. nu*_{N+1}` (length N+2), both in 1-based positions, i.e.
/// `lifted_angles[j]` is `nu_j`. Everything else is a 0-based array of length
/// N where index `i` stands for the 1-based index `i+1`.
#[derive(Clone, Debug)]
pub struct CurveGeometry {
    pub edge_lengths: Vec<f64>,
    pub unit_tangents: Vec<Vec2>,
    pub lifted_angles: Vec<f64>,
    pub dual_angles: Vec<f64>,
    pub edge_curvatures: Vec<f64>,
    pub vertex_curvatures: Vec<f64>,
    pub dual_lengths: Vec<f64>,
    pub edge_midpoints: Vec<Vec2>,
    pub vertex_normals: Vec<Vec2>,
    pub total_length: f64,
}

impl CurveGeometry {
    pub fn len(&self) -> usize {
        self.edge_lengths.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Lifted angle of edge `i` (0-based), `nu_{i+1}`.
    pub fn edge_angle(&self, i: usize) -> f64 {
        self.lifted_angles[i + 1]
    }

    /// Dual angle at vertex `i` (0-based), `nu*_{i+1}`.
    pub fn vertex_angle(&self, i: usize) -> f64 {
        self.dual_angles[i + 1]
    }
}

/// Tolerance used to reject antipodal tangent pairs in the angle lift.
const FOLD_TOL: f64 = 1e-12;

/// Lift unit tangents to a continuous angle sequence `nu_0 .. nu_{N+2}`.
///
/// `nu_1` is placed in `[0, 2*pi)` by the arccos branch of the first tangent;
/// successive angles follow the three-way branch on `D = det(t_i, t_{i+1})`
/// and `I = t_i . t_{i+1}`, so every increment stays below `pi` in modulus.
/// The two extra angles extrapolate the boundary increments periodically.
pub fn lift_tangent_angles(tangents: &[Vec2]) -> Result<Vec<f64>, GeometryError> {
    let n = tangents.len();
    for (i, t) in tangents.iter().enumerate() {
        if (t.norm() - 1.0).abs() > 1e-9 {
            return Err(GeometryError::NotUnit(i));
        }
    }
    let mut nu = vec![0.0; n + 3];
    let t1 = tangents[0];
    nu[1] = if t1.y < 0.0 {
        2.0 * PI - t1.x.clamp(-1.0, 1.0).acos()
    } else {
        t1.x.clamp(-1.0, 1.0).acos()
    };
    for i in 0..n {
        let ta = tangents[i];
        let tb = tangents[(i + 1) % n];
        let d = ta.det(tb).clamp(-1.0, 1.0);
        let dot = ta.dot(tb).clamp(-1.0, 1.0);
        if 1.0 + dot <= FOLD_TOL && d.abs() <= FOLD_TOL {
            return Err(GeometryError::DegenerateFold(i));
        }
        let inc = if dot > 0.0 {
            d.asin()
        } else if d > 0.0 {
            dot.acos()
        } else {
            -dot.acos()
        };
        nu[i + 2] = nu[i + 1] + inc;
    }
    nu[0] = nu[1] - (nu[n + 1] - nu[n]);
    nu[n + 2] = nu[n + 1] + (nu[2] - nu[1]);
    Ok(nu)
}

/// Compute every discrete geometric quantity of the curve.
///
/// Edge curvature integrates `k = d nu / ds` over the edge:
/// `k_i = (nu*_i - nu*_{i-1}) / r_i`. Vertex values are arithmetic means of
/// the two adjacent edge values.
pub fn derive_geometry(curve: &PolygonalCurve) -> Result<CurveGeometry, GeometryError> {
    let v = curve.vertices();
    let n = v.len();

    let mut edge_lengths = vec![0.0; n];
    let mut unit_tangents = vec![Vec2::default(); n];
    let mut edge_midpoints = vec![Vec2::default(); n];
    for i in 0..n {
        let prev = v[(i + n - 1) % n];
        let d = v[i] - prev;
        let r = d.norm();
        if !(r > 0.0) {
            return Err(GeometryError::ZeroLengthEdge(i));
        }
        edge_lengths[i] = r;
        unit_tangents[i] = d * (1.0 / r);
        edge_midpoints[i] = (prev + v[i]) * 0.5;
    }

    let lifted_angles = lift_tangent_angles(&unit_tangents)?;

    // nu*_j for j = 0 .. N+1.
    let mut dual_angles = vec![0.0; n + 2];
    for (j, da) in dual_angles.iter_mut().enumerate() {
        *da = 0.5 * (lifted_angles[j] + lifted_angles[j + 1]);
    }

    let mut edge_curvatures = vec![0.0; n];
    for i in 0..n {
        edge_curvatures[i] = (dual_angles[i + 1] - dual_angles[i]) / edge_lengths[i];
    }

    let mut vertex_curvatures = vec![0.0; n];
    let mut dual_lengths = vec![0.0; n];
    let mut vertex_normals = vec![Vec2::default(); n];
    for i in 0..n {
        let next = (i + 1) % n;
        vertex_curvatures[i] = 0.5 * (edge_curvatures[next] + edge_curvatures[i]);
        dual_lengths[i] = 0.5 * (edge_lengths[i] + edge_lengths[next]);
        let a = dual_angles[i + 1];
        vertex_normals[i] = Vec2::new(-a.sin(), a.cos());
    }

    let total_length = edge_lengths.iter().sum();

    Ok(CurveGeometry {
        edge_lengths,
        unit_tangents,
        lifted_angles,
        dual_angles,
        edge_curvatures,
        vertex_curvatures,
        dual_lengths,
        edge_midpoints,
        vertex_normals,
        total_length,
    })
}
