//! Optimal placement of N points on a fixed smooth closed curve.
//!
//! Placing points so that the phi-weighted relative local length is exactly
//! one reduces to the reparameterization ODE
//! `dl/du = L <phi(k)> / (g(l) phi(k(l)))`, integrated here with classical
//! RK4. The length and area defects of the resulting inscribed polygons
//! reproduce the discrepancy table of the experiments; the first-order
//! optimality conditions are exposed as per-point residuals.

use std::fmt;

use crate::geometry::Vec2;
use crate::redistribution::ShapeSpec;

#[derive(Clone, Debug, PartialEq)]
pub enum StaticOptError {
    /// phi(k) not positive somewhere along the curve.
    ShapeDegeneracy { l: f64, phi: f64 },
    /// A supplied point is farther than the tolerance from the curve.
    OffCurve { index: usize, distance: f64 },
    BadAxes,
}

impl fmt::Display for StaticOptError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StaticOptError::ShapeDegeneracy { l, phi } => {
                write!(f, "phi(k) = {phi} at parameter {l} is not positive")
            }
            StaticOptError::OffCurve { index, distance } => {
                write!(f, "point {index} lies {distance} away from the curve")
            }
            StaticOptError::BadAxes => write!(f, "curve axes must be positive"),
        }
    }
}

impl std::error::Error for StaticOptError {}

/// Composite Simpson quadrature of `f` over `[0, 1]` with `2*panels` strips.
pub(crate) fn composite_simpson(f: impl Fn(f64) -> f64, panels: usize) -> f64 {
    let n = 2 * panels;
    let h = 1.0 / n as f64;
    let mut acc = f(0.0) + f(1.0);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(i as f64 * h);
    }
    acc * h / 3.0
}

/// Panels used for the reference length, area and shape averages.
const QUAD_PANELS: usize = 10_000;

type CurveFn = Box<dyn Fn(f64) -> Vec2 + Send + Sync>;

/// A smooth closed curve parameterized over `[0, 1]`, with derivatives and
/// reference length/area computed by quadrature.
pub struct ParametricCurve {
    position: CurveFn,
    velocity: CurveFn,
    acceleration: CurveFn,
    length: f64,
    area: f64,
}

impl ParametricCurve {
    fn from_parts(position: CurveFn, velocity: CurveFn, acceleration: CurveFn) -> Self {
        let length = composite_simpson(|l| velocity(l).norm(), QUAD_PANELS);
        let area = 0.5 * composite_simpson(|l| position(l).det(velocity(l)), QUAD_PANELS);
        ParametricCurve { position, velocity, acceleration, length, area }
    }

    pub fn ellipse(a: f64, b: f64) -> Result<Self, StaticOptError> {
        if !(a > 0.0 && b > 0.0) {
            return Err(StaticOptError::BadAxes);
        }
        use std::f64::consts::TAU;
        Ok(Self::from_parts(
            Box::new(move |l| Vec2::new(a * (TAU * l).cos(), b * (TAU * l).sin())),
            Box::new(move |l| Vec2::new(-a * TAU * (TAU * l).sin(), b * TAU * (TAU * l).cos())),
            Box::new(move |l| {
                Vec2::new(-a * TAU * TAU * (TAU * l).cos(), -b * TAU * TAU * (TAU * l).sin())
            }),
        ))
    }

    pub fn circle(radius: f64) -> Result<Self, StaticOptError> {
        Self::ellipse(radius, radius)
    }

    /// Build from a position map alone; derivatives by five-point central
    /// differences (adequate for diagnostics, not for reference constants).
    pub fn from_position_fn(f: impl Fn(f64) -> Vec2 + Send + Sync + Clone + 'static) -> Self {
        let h = 1e-4;
        let f1 = f.clone();
        let f2 = f.clone();
        let velocity = move |l: f64| {
            (f1(l - 2.0 * h) - f1(l + 2.0 * h) + (f1(l + h) - f1(l - h)) * 8.0) * (1.0 / (12.0 * h))
        };
        let acceleration = move |l: f64| {
            (-f2(l + 2.0 * h) - f2(l - 2.0 * h) + (f2(l + h) + f2(l - h)) * 16.0
                - f2(l) * 30.0)
                * (1.0 / (12.0 * h * h))
        };
        Self::from_parts(Box::new(f), Box::new(velocity), Box::new(acceleration))
    }

    pub fn position(&self, l: f64) -> Vec2 {
        (self.position)(l.rem_euclid(1.0))
    }

    pub fn speed(&self, l: f64) -> f64 {
        (self.velocity)(l.rem_euclid(1.0)).norm()
    }

    pub fn tangent(&self, l: f64) -> Vec2 {
        (self.velocity)(l.rem_euclid(1.0)).normalized()
    }

    pub fn curvature(&self, l: f64) -> f64 {
        let l = l.rem_euclid(1.0);
        let v = (self.velocity)(l);
        let a = (self.acceleration)(l);
        v.det(a) / v.norm().powi(3)
    }

    /// Reference length by quadrature.
    pub fn length(&self) -> f64 {
        self.length
    }

    /// Reference enclosed area by quadrature.
    pub fn area(&self) -> f64 {
        self.area
    }

    /// Parameter of the closest curve point and the distance to it.
    pub fn project(&self, p: Vec2) -> (f64, f64) {
        let coarse = 2048;
        let mut best_l = 0.0;
        let mut best_d = f64::INFINITY;
        for i in 0..coarse {
            let l = i as f64 / coarse as f64;
            let d = (self.position(l) - p).norm();
            if d < best_d {
                best_d = d;
                best_l = l;
            }
        }
        // Golden-section refinement of the squared distance.
        let mut lo = best_l - 1.0 / coarse as f64;
        let mut hi = best_l + 1.0 / coarse as f64;
        let inv_phi = 0.618_033_988_749_894_9;
        let dist2 = |l: f64| {
            let d = self.position(l) - p;
            d.dot(d)
        };
        let mut x1 = hi - inv_phi * (hi - lo);
        let mut x2 = lo + inv_phi * (hi - lo);
        let mut f1 = dist2(x1);
        let mut f2 = dist2(x2);
        for _ in 0..90 {
            if f1 < f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - inv_phi * (hi - lo);
                f1 = dist2(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + inv_phi * (hi - lo);
                f2 = dist2(x2);
            }
        }
        let l = 0.5 * (lo + hi);
        (l.rem_euclid(1.0), dist2(l).sqrt())
    }
}

impl fmt::Debug for ParametricCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParametricCurve")
            .field("length", &self.length)
            .field("area", &self.area)
            .finish()
    }
}

/// Place N points with `r_phi = 1`: integrate the reparameterization ODE
/// from `l(0) = 0` with RK4 (100 substeps per output point) and evaluate the
/// curve at `u_i = i/N`. If the integrated `l(1)` misses 1 by more than 1e-6
/// the rate constant is rescaled by `l(1)` and the solve repeated once.
pub fn reparameterize(
    curve: &ParametricCurve,
    shape: &ShapeSpec,
    n: usize,
) -> Result<Vec<Vec2>, StaticOptError> {
    // phi must be positive along the whole curve for the ODE to make sense.
    let probe = 4096;
    for i in 0..probe {
        let l = i as f64 / probe as f64;
        let phi = shape.phi(curve.curvature(l));
        if !(phi > 0.0) {
            return Err(StaticOptError::ShapeDegeneracy { l, phi });
        }
    }
    let mean_phi = composite_simpson(
        |l| shape.phi(curve.curvature(l)) * curve.speed(l),
        QUAD_PANELS,
    ) / curve.length();

    let mut rate = curve.length() * mean_phi;
    let mut params = integrate_reparameterization(curve, shape, n, rate);
    let l_end = *params.last().unwrap();
    if (l_end - 1.0).abs() > 1e-6 {
        rate /= l_end;
        params = integrate_reparameterization(curve, shape, n, rate);
    }
    Ok(params[..n].iter().map(|&l| curve.position(l)).collect())
}

/// RK4 march of `dl/du = rate / (g(l) phi(k(l)))`; returns `l` at
/// `u = 0, 1/N, ..., 1`.
fn integrate_reparameterization(
    curve: &ParametricCurve,
    shape: &ShapeSpec,
    n: usize,
    rate: f64,
) -> Vec<f64> {
    let substeps = 100;
    let h = 1.0 / (n * substeps) as f64;
    let rhs = |l: f64| rate / (curve.speed(l) * shape.phi(curve.curvature(l)));
    let mut l = 0.0;
    let mut out = Vec::with_capacity(n + 1);
    out.push(0.0);
    for _ in 0..n {
        for _ in 0..substeps {
            let k1 = rhs(l);
            let k2 = rhs(l + 0.5 * h * k1);
            let k3 = rhs(l + 0.5 * h * k2);
            let k4 = rhs(l + h * k3);
            l += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        out.push(l);
    }
    out
}

/// Ellipse points whose exact tangents are the N prescribed directions
/// `(-sin(2 pi i / N), cos(2 pi i / N))`, the crystalline redistribution.
pub fn crystalline_points(a: f64, b: f64, n: usize) -> Result<Vec<Vec2>, StaticOptError> {
    if !(a > 0.0 && b > 0.0) {
        return Err(StaticOptError::BadAxes);
    }
    use std::f64::consts::TAU;
    let mut points = Vec::with_capacity(n);
    for i in 0..n {
        let dir = TAU * i as f64 / n as f64;
        // Tangent direction (-a sin, b cos)/|..| matches (-sin dir, cos dir)
        // at theta with tan(theta) = (b/a) tan(dir), same quadrant.
        let mut theta = f64::atan2(b * dir.sin(), a * dir.cos());
        let mismatch = |th: f64| {
            let t = Vec2::new(-a * th.sin(), b * th.cos()).normalized();
            t.det(Vec2::new(-dir.sin(), dir.cos()))
        };
        if mismatch(theta).abs() > 1e-12 {
            // Bisection fallback around the closed-form angle.
            let (mut lo, mut hi) = (theta - 0.2, theta + 0.2);
            let (mut flo, fhi) = (mismatch(lo), mismatch(hi));
            debug_assert!(flo * fhi <= 0.0);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                let fm = mismatch(mid);
                if flo * fm <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
                if hi - lo < 1e-15 {
                    break;
                }
            }
            theta = 0.5 * (lo + hi);
        }
        points.push(Vec2::new(a * theta.cos(), b * theta.sin()));
    }
    Ok(points)
}

fn polygon_length(points: &[Vec2]) -> f64 {
    let n = points.len();
    (0..n).map(|i| (points[(i + 1) % n] - points[i]).norm()).sum()
}

fn polygon_area(points: &[Vec2]) -> f64 {
    let n = points.len();
    0.5 * (0..n).map(|i| points[i].det(points[(i + 1) % n])).sum::<f64>()
}

const ON_CURVE_TOL: f64 = 1e-9;

fn check_on_curve(curve: &ParametricCurve, points: &[Vec2]) -> Result<Vec<f64>, StaticOptError> {
    let mut params = Vec::with_capacity(points.len());
    for (index, p) in points.iter().enumerate() {
        let (l, distance) = curve.project(*p);
        if distance > ON_CURVE_TOL {
            return Err(StaticOptError::OffCurve { index, distance });
        }
        params.push(l);
    }
    Ok(params)
}

/// Length and area defects `Delta_L = 1 - L(X)/L`, `Delta_A = 1 - A(X)/A` of
/// the inscribed polygon against the quadrature reference values.
pub fn defects(curve: &ParametricCurve, points: &[Vec2]) -> Result<(f64, f64), StaticOptError> {
    check_on_curve(curve, points)?;
    let dl = 1.0 - polygon_length(points) / curve.length();
    let da = 1.0 - polygon_area(points) / curve.area();
    Ok((dl, da))
}

/// First-order optimality residuals of the length and area discrepancy
/// functionals: `n~_i . t_i` and `det(t~_i, t_i)` with `t_i` the exact curve
/// tangent at each point.
pub fn necessary_residuals(
    curve: &ParametricCurve,
    points: &[Vec2],
) -> Result<(Vec<f64>, Vec<f64>), StaticOptError> {
    let params = check_on_curve(curve, points)?;
    let n = points.len();
    let mut length_res = Vec::with_capacity(n);
    let mut area_res = Vec::with_capacity(n);
    for i in 0..n {
        let prev = points[(i + n - 1) % n];
        let next = points[(i + 1) % n];
        let tangent = curve.tangent(params[i]);
        let n_tilde = (next - points[i]).normalized() - (points[i] - prev).normalized();
        length_res.push(n_tilde.dot(tangent));
        let t_tilde = next - prev;
        area_res.push(t_tilde.det(tangent));
    }
    Ok((length_res, area_res))
}
