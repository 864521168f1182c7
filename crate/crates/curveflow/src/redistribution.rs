//! Curvature adjusted tangential velocities.
//!
//! The tangential speed `alpha` solves the discrete form of
//! `d(phi(k) alpha)/ds = F` on the polygon, where the source `F` drives the
//! phi-weighted relative local length toward 1: grid points drift along the
//! curve until their density is proportional to `phi(k)`. The solve is a
//! telescoping cumulative sum closed by the renormalization constraint
//! `<phi(k*) alpha> = 0` over the dual volumes.

use std::fmt;

use crate::geometry::CurveGeometry;

#[derive(Clone, Debug, PartialEq)]
pub enum RedistError {
    /// epsilon outside [0, 1] for the smoothed shape.
    BadEpsilon(f64),
    /// Nonpositive exponent for the power shape.
    BadExponent(f64),
    NegativeRelaxation,
    /// phi(k*) not positive at some vertex; use the smoothed shape instead.
    ShapeDegeneracy { vertex: usize, phi: f64 },
    LengthMismatch { expected: usize, got: usize },
}

impl fmt::Display for RedistError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RedistError::BadEpsilon(e) => write!(f, "shape epsilon {e} outside [0, 1]"),
            RedistError::BadExponent(p) => write!(f, "shape exponent {p} must be positive"),
            RedistError::NegativeRelaxation => write!(f, "relaxation constants must be >= 0"),
            RedistError::ShapeDegeneracy { vertex, phi } => write!(
                f,
                "phi(k*) = {phi} at vertex {vertex} is not positive; \
                 use the smoothed shape for curves with vanishing curvature"
            ),
            RedistError::LengthMismatch { expected, got } => {
                write!(f, "per-edge array length {got}, expected {expected}")
            }
        }
    }
}

impl std::error::Error for RedistError {}

/// Shape function `phi(k)` controlling the target grid density.
///
/// `phi` is even, positive away from zero and nondecreasing in `|k|`; grid
/// points concentrate where `phi(k)` is above its curve average.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ShapeSpec {
    /// `phi(k) = 1 - eps + eps*sqrt(1 - eps + eps k^2)`; interpolates from
    /// the uniform shape (eps = 0) to `|k|` (eps = 1) and stays positive for
    /// eps < 1.
    Smoothed { epsilon: f64 },
    /// `phi(k) = |k|^p`, floored at `floor` to keep the solve regular.
    Power { p: f64, floor: f64 },
    /// `phi = 1`: plain (asymptotically) uniform redistribution.
    Unit,
}

impl ShapeSpec {
    pub const POWER_FLOOR: f64 = 1e-6;

    pub fn smoothed(epsilon: f64) -> Result<Self, RedistError> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(RedistError::BadEpsilon(epsilon));
        }
        Ok(ShapeSpec::Smoothed { epsilon })
    }

    pub fn power(p: f64) -> Result<Self, RedistError> {
        if !(p > 0.0) {
            return Err(RedistError::BadExponent(p));
        }
        Ok(ShapeSpec::Power { p, floor: Self::POWER_FLOOR })
    }

    /// `(phi(k), phi'(k))`.
    pub fn eval(&self, k: f64) -> (f64, f64) {
        match *self {
            ShapeSpec::Smoothed { epsilon: e } => {
                let root = (1.0 - e + e * k * k).sqrt();
                let phi = 1.0 - e + e * root;
                let dphi = if root > 0.0 { e * e * k / root } else { 0.0 };
                (phi, dphi)
            }
            ShapeSpec::Power { p, floor } => {
                let mag = k.abs();
                let phi = mag.powf(p);
                if phi <= floor {
                    (floor, 0.0)
                } else {
                    (phi, p * k.signum() * mag.powf(p - 1.0))
                }
            }
            ShapeSpec::Unit => (1.0, 0.0),
        }
    }

    pub fn phi(&self, k: f64) -> f64 {
        self.eval(k).0
    }
}

/// Shape function plus the relaxation constants of `omega(t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RedistParams {
    pub shape: ShapeSpec,
    pub kappa1: f64,
    pub kappa2: f64,
}

impl RedistParams {
    pub fn new(shape: ShapeSpec, kappa1: f64, kappa2: f64) -> Result<Self, RedistError> {
        if kappa1 < 0.0 || kappa2 < 0.0 {
            return Err(RedistError::NegativeRelaxation);
        }
        Ok(RedistParams { shape, kappa1, kappa2 })
    }

    /// No tangential motion beyond preserving the initial ratio.
    pub fn frozen(shape: ShapeSpec) -> Self {
        RedistParams { shape, kappa1: 0.0, kappa2: 0.0 }
    }
}

/// Per-edge relative local length adopted to the shape function, and its log.
#[derive(Clone, Debug)]
pub struct RelativeLocalLength {
    pub r_phi: Vec<f64>,
    pub theta: Vec<f64>,
}

/// Relaxation rate `omega = kappa1 + kappa2 <k beta>`.
///
/// `<k beta>` equals minus the logarithmic derivative of total length, so a
/// shrinking curve gets a positive boost that keeps the redistribution
/// converging as the curve collapses.
pub fn relaxation_omega(params: &RedistParams, geom: &CurveGeometry, beta: &[f64]) -> f64 {
    debug_assert_eq!(beta.len(), geom.len());
    let mut kb = 0.0;
    for i in 0..geom.len() {
        kb += geom.edge_curvatures[i] * beta[i] * geom.edge_lengths[i];
    }
    params.kappa1 + params.kappa2 * kb / geom.total_length
}

/// Solve for the per-vertex tangential velocities `alpha_i`.
///
/// The per-edge source is
/// `psi_i = (<f>/<phi>) phi(k_i) r_i - f_i r_i + (L <phi> / N - phi(k_i) r_i) omega`
/// with `f_i = (d_s d_s* beta + k_i^2 beta_i) phi'(k_i) - k_i beta_i phi(k_i)`;
/// partial sums of `psi` telescope into `phi(k_i*) alpha_i` and the constant
/// of integration is fixed by `sum phi(k_i*) alpha_i r_i* = 0`.
pub fn tangential_velocities(
    geom: &CurveGeometry,
    beta: &[f64],
    params: &RedistParams,
    omega: f64,
) -> Result<Vec<f64>, RedistError> {
    let n = geom.len();
    if beta.len() != n {
        return Err(RedistError::LengthMismatch { expected: n, got: beta.len() });
    }
    let shape = &params.shape;
    let total = geom.total_length;

    // phi at dual (vertex) curvatures; must stay positive for the closure.
    let mut phi_star = vec![0.0; n];
    for i in 0..n {
        let phi = shape.phi(geom.vertex_curvatures[i]);
        if !(phi > 0.0) || !phi.is_finite() {
            return Err(RedistError::ShapeDegeneracy { vertex: i, phi });
        }
        phi_star[i] = phi;
    }

    // Difference quotients of beta across dual and primal volumes.
    let mut dstar_beta = vec![0.0; n];
    for i in 0..n {
        dstar_beta[i] = (beta[(i + 1) % n] - beta[i]) / geom.dual_lengths[i];
    }

    let mut f = vec![0.0; n];
    let mut phi_edge = vec![0.0; n];
    let mut mean_f = 0.0;
    let mut mean_phi = 0.0;
    for i in 0..n {
        let r = geom.edge_lengths[i];
        let k = geom.edge_curvatures[i];
        let (phi, dphi) = shape.eval(k);
        let dd_beta = (dstar_beta[i] - dstar_beta[(i + n - 1) % n]) / r;
        f[i] = (dd_beta + k * k * beta[i]) * dphi - k * beta[i] * phi;
        phi_edge[i] = phi;
        mean_f += f[i] * r;
        mean_phi += phi * r;
    }
    mean_f /= total;
    mean_phi /= total;

    let uniform_cell = total * mean_phi / n as f64;
    let mut psi = vec![0.0; n];
    for i in 0..n {
        let r = geom.edge_lengths[i];
        psi[i] = (mean_f / mean_phi) * phi_edge[i] * r - f[i] * r
            + (uniform_cell - phi_edge[i] * r) * omega;
    }

    // Base vertex for the telescoping closure. The floored power shape can
    // leave phi(k*) at the floor; re-basing to the largest |k*| avoids a tiny
    // pivot without changing the solution.
    let base = match shape {
        ShapeSpec::Power { .. } => {
            let mut b = 0;
            for i in 1..n {
                if geom.vertex_curvatures[i].abs() > geom.vertex_curvatures[b].abs() {
                    b = i;
                }
            }
            b
        }
        _ => 0,
    };

    // cum[j] = sum of psi over the j edges following the base vertex, so that
    // phi(k*_{base+j}) alpha_{base+j} = phi(k*_base) alpha_base + cum[j].
    let mut cum = vec![0.0; n];
    let mut acc = 0.0;
    for j in 1..n {
        acc += psi[(base + j) % n];
        cum[j] = acc;
    }

    let mut weighted = 0.0;
    for j in 1..n {
        weighted += cum[j] * geom.dual_lengths[(base + j) % n];
    }
    let pivot = -weighted / total;

    let mut alpha = vec![0.0; n];
    for j in 0..n {
        let i = (base + j) % n;
        alpha[i] = (pivot + cum[j]) / phi_star[i];
    }
    Ok(alpha)
}

/// Per-edge `r_phi,i = N r_i phi(k_i) / (L <phi>)` and `theta_i = ln r_phi,i`.
pub fn relative_local_length(geom: &CurveGeometry, shape: &ShapeSpec) -> RelativeLocalLength {
    let n = geom.len();
    let mut mean_phi = 0.0;
    for i in 0..n {
        mean_phi += shape.phi(geom.edge_curvatures[i]) * geom.edge_lengths[i];
    }
    mean_phi /= geom.total_length;
    let mut r_phi = vec![0.0; n];
    let mut theta = vec![0.0; n];
    for i in 0..n {
        let v = (n as f64) * geom.edge_lengths[i] * shape.phi(geom.edge_curvatures[i])
            / (geom.total_length * mean_phi);
        r_phi[i] = v;
        theta[i] = v.ln();
    }
    RelativeLocalLength { r_phi, theta }
}
