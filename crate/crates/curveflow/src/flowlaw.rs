//! Normal velocity laws `beta = w(x, nu, k) * k + F(x, nu)`.
//!
//! A law is an immutable value evaluated pointwise at whatever edge or vertex
//! quantities the stepper chooses; it never sees the whole curve. Sublinear
//! powers of curvature are regularized by clamping `|k|` away from zero.

use std::collections::BTreeMap;
use std::fmt;

use crate::geometry::Vec2;
use crate::segmentation::{GeodesicLaw, SharpLaw};

/// Clamped evaluation of `|k|^(gamma-1)`.
///
/// For `gamma < 1` the weight is singular at `k = 0`; `|k|` is replaced by
/// `max(|k|, epsilon)` there. For `gamma >= 1` no clamping is applied.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerRegularization {
    pub gamma: f64,
    pub epsilon: f64,
}

impl PowerRegularization {
    pub const DEFAULT_EPSILON: f64 = 1e-6;

    pub fn new(gamma: f64, epsilon: f64) -> Result<Self, LawError> {
        if !(gamma > 0.0) {
            return Err(LawError::BadParameter("gamma must be positive"));
        }
        if !(epsilon > 0.0) {
            return Err(LawError::BadParameter("regularization cutoff must be positive"));
        }
        Ok(PowerRegularization { gamma, epsilon })
    }
}

/// `|k|^(gamma-1)` with the sublinear singularity clamped at `reg.epsilon`.
pub fn regularized_power_weight(k: f64, reg: &PowerRegularization) -> f64 {
    let mag = if reg.gamma < 1.0 {
        k.abs().max(reg.epsilon)
    } else {
        k.abs()
    };
    mag.powf(reg.gamma - 1.0)
}

#[derive(Clone, Debug, PartialEq)]
pub enum LawError {
    UnknownLaw(String),
    MissingParameter { law: &'static str, param: &'static str },
    BadParameter(&'static str),
    /// A weight or force evaluated to NaN/inf; carries the offending input.
    NonFinite { law: &'static str, x: Vec2, nu: f64, k: f64 },
}

impl fmt::Display for LawError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LawError::UnknownLaw(name) => write!(f, "unknown flow law '{name}'"),
            LawError::MissingParameter { law, param } => {
                write!(f, "law '{law}' is missing parameter '{param}'")
            }
            LawError::BadParameter(msg) => write!(f, "bad law parameter: {msg}"),
            LawError::NonFinite { law, x, nu, k } => write!(
                f,
                "law '{law}' evaluated non-finite at x=({}, {}), nu={nu}, k={k}",
                x.x, x.y
            ),
        }
    }
}

impl std::error::Error for LawError {}

/// The pair `(w, F)` defining the normal velocity `beta = w*k + F`.
#[derive(Clone, Debug)]
pub enum FlowLaw {
    /// `beta = k`.
    CurveShortening,
    /// `beta = |k|^(gamma-1) k`; `gamma = 1/3` is the affine flow.
    Power(PowerRegularization),
    /// Anisotropic weight `w(nu) = 1 - c*cos(m*(nu - nu0))`, no force.
    Weighted { c: f64, m: f64, nu0: f64 },
    /// `w(nu) = 1 - 0.7*cos(6*nu)`, `F(nu) = sin(nu)`.
    ChouZhu,
    /// Convexity-breaking force `F = -2pq sin(q(4x1^2+x2^2)) (-4x1 sin nu + x2 cos nu)`.
    ConvexityBreakA { p: f64, q: f64 },
    /// Convexity-breaking force `F = 2pq pi cos(q pi |x|^2) x.n`.
    ConvexityBreakB { p: f64, q: f64 },
    /// `w(nu) = a^2 b^2 / (2 T (a^2 sin^2 nu + b^2 cos^2 nu))`, the weight for
    /// which an `a:b` ellipse shrinks homothetically with extinction time `T`.
    SelfsimWeighted { a: f64, b: f64, t_ext: f64 },
    /// Image-driven geodesic flow `beta = gamma(x) k - grad gamma(x) . n`.
    Geodesic(GeodesicLaw),
    /// Image-driven forcing `beta = k + F_max - (F_max - F_min) I(x)`.
    Sharp(SharpLaw),
}

/// One pointwise evaluation of a law.
#[derive(Clone, Copy, Debug)]
pub struct LawEval {
    pub w: f64,
    pub f: f64,
    pub beta: f64,
}

/// Inward unit normal for tangent angle `nu`.
fn normal_of(nu: f64) -> Vec2 {
    Vec2::new(-nu.sin(), nu.cos())
}

impl FlowLaw {
    pub fn name(&self) -> &'static str {
        match self {
            FlowLaw::CurveShortening => "curve_shortening",
            FlowLaw::Power(reg) if (reg.gamma - 1.0 / 3.0).abs() < 1e-12 => "affine",
            FlowLaw::Power(_) => "power",
            FlowLaw::Weighted { .. } => "weighted",
            FlowLaw::ChouZhu => "chou_zhu",
            FlowLaw::ConvexityBreakA { .. } => "convexity_break_a",
            FlowLaw::ConvexityBreakB { .. } => "convexity_break_b",
            FlowLaw::SelfsimWeighted { .. } => "selfsim_weighted",
            FlowLaw::Geodesic(_) => "geodesic",
            FlowLaw::Sharp(_) => "sharp",
        }
    }

    /// The weight `w(x, nu, k)`.
    pub fn weight(&self, x: Vec2, nu: f64, k: f64) -> Result<f64, LawError> {
        let w = match self {
            FlowLaw::CurveShortening => 1.0,
            FlowLaw::Power(reg) => regularized_power_weight(k, reg),
            FlowLaw::Weighted { c, m, nu0 } => 1.0 - c * (m * (nu - nu0)).cos(),
            FlowLaw::ChouZhu => 1.0 - 0.7 * (6.0 * nu).cos(),
            FlowLaw::ConvexityBreakA { .. } | FlowLaw::ConvexityBreakB { .. } => 1.0,
            FlowLaw::SelfsimWeighted { a, b, t_ext } => {
                let (s, c) = nu.sin_cos();
                a * a * b * b / (2.0 * t_ext * (a * a * s * s + b * b * c * c))
            }
            FlowLaw::Geodesic(g) => g.weight(x),
            FlowLaw::Sharp(_) => 1.0,
        };
        if !w.is_finite() {
            return Err(LawError::NonFinite { law: self.name(), x, nu, k });
        }
        Ok(w)
    }

    /// The external force `F(x, nu)`.
    pub fn force(&self, x: Vec2, nu: f64) -> Result<f64, LawError> {
        let f = match self {
            FlowLaw::CurveShortening
            | FlowLaw::Power(_)
            | FlowLaw::Weighted { .. }
            | FlowLaw::SelfsimWeighted { .. } => 0.0,
            FlowLaw::ChouZhu => nu.sin(),
            FlowLaw::ConvexityBreakA { p, q } => {
                let arg = q * (4.0 * x.x * x.x + x.y * x.y);
                -2.0 * p * q * arg.sin() * (-4.0 * x.x * nu.sin() + x.y * nu.cos())
            }
            FlowLaw::ConvexityBreakB { p, q } => {
                use std::f64::consts::PI;
                let arg = q * PI * (x.x * x.x + x.y * x.y);
                2.0 * p * q * PI * arg.cos() * x.dot(normal_of(nu))
            }
            FlowLaw::Geodesic(g) => g.force(x, normal_of(nu)),
            FlowLaw::Sharp(s) => s.force(x),
        };
        if !f.is_finite() {
            return Err(LawError::NonFinite { law: self.name(), x, nu, k: f64::NAN });
        }
        Ok(f)
    }

    /// Evaluate `(w, F, beta)` with `beta = w*k + F`.
    pub fn eval(&self, x: Vec2, nu: f64, k: f64) -> Result<LawEval, LawError> {
        let w = self.weight(x, nu, k)?;
        let f = self.force(x, nu)?;
        Ok(LawEval { w, f, beta: w * k + f })
    }
}

fn get(params: &BTreeMap<String, f64>, key: &str) -> Option<f64> {
    params.get(key).copied()
}

fn require(
    params: &BTreeMap<String, f64>,
    law: &'static str,
    param: &'static str,
) -> Result<f64, LawError> {
    get(params, param).ok_or(LawError::MissingParameter { law, param })
}

/// Build a named built-in law from a flat parameter map.
///
/// Recognized names: `curve_shortening`, `affine`, `power` (gamma, optional
/// eps_reg), `weighted` (c, m, optional nu0), `chou_zhu`,
/// `convexity_break_a` / `convexity_break_b` (optional p, q),
/// `selfsim_weighted` (a, b, t_ext).
pub fn make_builtin(name: &str, params: &BTreeMap<String, f64>) -> Result<FlowLaw, LawError> {
    let eps = get(params, "eps_reg").unwrap_or(PowerRegularization::DEFAULT_EPSILON);
    match name {
        "curve_shortening" => Ok(FlowLaw::CurveShortening),
        "affine" => Ok(FlowLaw::Power(PowerRegularization::new(1.0 / 3.0, eps)?)),
        "power" => {
            let gamma = require(params, "power", "gamma")?;
            Ok(FlowLaw::Power(PowerRegularization::new(gamma, eps)?))
        }
        "weighted" => Ok(FlowLaw::Weighted {
            c: require(params, "weighted", "c")?,
            m: require(params, "weighted", "m")?,
            nu0: get(params, "nu0").unwrap_or(0.0),
        }),
        "chou_zhu" => Ok(FlowLaw::ChouZhu),
        "convexity_break_a" => Ok(FlowLaw::ConvexityBreakA {
            p: get(params, "p").unwrap_or(1.25),
            q: get(params, "q").unwrap_or(3.0),
        }),
        "convexity_break_b" => Ok(FlowLaw::ConvexityBreakB {
            p: get(params, "p").unwrap_or(1.956),
            q: get(params, "q").unwrap_or(1.15),
        }),
        "selfsim_weighted" => Ok(FlowLaw::SelfsimWeighted {
            a: require(params, "selfsim_weighted", "a")?,
            b: require(params, "selfsim_weighted", "b")?,
            t_ext: require(params, "selfsim_weighted", "t_ext")?,
        }),
        other => Err(LawError::UnknownLaw(other.to_string())),
    }
}
