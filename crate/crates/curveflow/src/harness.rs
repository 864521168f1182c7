//! Convergence and discrepancy experiments against exact shrinking ellipses.
//!
//! Two exact solutions drive the tables: the affine flow `beta = k^{1/3}`
//! shrinks an `a:b` ellipse homothetically with scale
//! `eta(t) = (1 - 4/3 (ab)^{-2/3} t)^{3/4}`, and the weighted flow with the
//! `selfsim_weighted` law shrinks it with `eta(t) = sqrt(1 - t/T)`. Errors
//! are measured by the implicit ellipse residual per grid point, collected
//! into `L^q((0,t_M), L^p)` norms, and convergence orders come from grid
//! doubling.

use std::fmt;

use crate::flowlaw::{FlowLaw, PowerRegularization};
use crate::geometry::{PolygonalCurve, Vec2};
use crate::redistribution::{RedistParams, ShapeSpec};
use crate::staticopt::ParametricCurve;
use crate::stepper::{evolve, StepControl, StepError, StopRule, TimeStepMode};

#[derive(Clone, Debug, PartialEq)]
pub enum HarnessError {
    /// Sample time at or past the extinction time.
    Extinction { t: f64, t_ext: f64 },
    /// Grid list must be successive doublings for EOC.
    NotDoubling,
    BadSampling(&'static str),
    /// An evolution did not produce the expected snapshot count.
    IncompleteRun { expected: usize, got: usize },
    Step(String),
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::Extinction { t, t_ext } => {
                write!(f, "sample time {t} is past the extinction time {t_ext}")
            }
            HarnessError::NotDoubling => write!(f, "grid sizes must double successively"),
            HarnessError::BadSampling(msg) => write!(f, "bad sampling: {msg}"),
            HarnessError::IncompleteRun { expected, got } => {
                write!(f, "run produced {got} snapshots, expected {expected}")
            }
            HarnessError::Step(msg) => write!(f, "evolution failed: {msg}"),
        }
    }
}

impl std::error::Error for HarnessError {}

impl From<StepError> for HarnessError {
    fn from(e: StepError) -> Self {
        HarnessError::Step(e.to_string())
    }
}

/// Exact homothetic solution of the affine flow on an `a:b` ellipse.
#[derive(Clone, Copy, Debug)]
pub struct AffineExact {
    pub a: f64,
    pub b: f64,
}

impl AffineExact {
    pub fn new(a: f64, b: f64) -> Self {
        AffineExact { a, b }
    }

    /// Extinction time `T = 3/4 (ab)^{2/3}`.
    pub fn extinction_time(&self) -> f64 {
        0.75 * (self.a * self.b).powf(2.0 / 3.0)
    }

    /// Scale factor `eta(t) = (1 - 4/3 (ab)^{-2/3} t)^{3/4}`.
    pub fn eta(&self, t: f64) -> f64 {
        (1.0 - 4.0 / 3.0 * (self.a * self.b).powf(-2.0 / 3.0) * t).powf(0.75)
    }

    /// `zeta(u) = a^2 sin^2(2 pi u) + b^2 cos^2(2 pi u)`.
    pub fn zeta(&self, u: f64) -> f64 {
        let z = 2.0 * std::f64::consts::PI * u;
        let (s, c) = z.sin_cos();
        self.a * self.a * s * s + self.b * self.b * c * c
    }

    /// Exact curvature `k(u, t) = a b eta(t)^{-1} zeta(u)^{-3/2}`.
    pub fn curvature(&self, u: f64, t: f64) -> f64 {
        self.a * self.b / (self.eta(t) * self.zeta(u).powf(1.5))
    }

    pub fn law(&self) -> FlowLaw {
        FlowLaw::Power(PowerRegularization::new(1.0 / 3.0, PowerRegularization::DEFAULT_EPSILON).unwrap())
    }
}

/// Exact solution of the weighted flow with scale `eta(t) = sqrt(1 - t/T)`.
#[derive(Clone, Copy, Debug)]
pub struct WeightedExact {
    pub a: f64,
    pub b: f64,
    pub t_ext: f64,
}

impl WeightedExact {
    pub fn new(a: f64, b: f64, t_ext: f64) -> Self {
        WeightedExact { a, b, t_ext }
    }

    pub fn eta(&self, t: f64) -> f64 {
        (1.0 - t / self.t_ext).sqrt()
    }

    pub fn law(&self) -> FlowLaw {
        FlowLaw::SelfsimWeighted { a: self.a, b: self.b, t_ext: self.t_ext }
    }
}

/// Norm selector for both the space index `p` and the time index `q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PNorm {
    One,
    Two,
    Inf,
}

impl PNorm {
    pub const ALL: [PNorm; 3] = [PNorm::One, PNorm::Two, PNorm::Inf];

    pub fn label(&self) -> &'static str {
        match self {
            PNorm::One => "1",
            PNorm::Two => "2",
            PNorm::Inf => "inf",
        }
    }

    fn reduce(&self, values: &[f64]) -> f64 {
        let m = values.len() as f64;
        match self {
            PNorm::One => values.iter().sum::<f64>() / m,
            PNorm::Two => (values.iter().map(|v| v * v).sum::<f64>() / m).sqrt(),
            PNorm::Inf => values.iter().cloned().fold(0.0, f64::max),
        }
    }
}

/// Per-point implicit-ellipse residual norm
/// `err_p = ||x1^2/(a eta)^2 + x2^2/(b eta)^2 - 1||_p` at time `t`.
pub fn err_p(
    curve: &PolygonalCurve,
    exact: &AffineExact,
    t: f64,
    p: PNorm,
) -> Result<f64, HarnessError> {
    let t_ext = exact.extinction_time();
    if t >= t_ext {
        return Err(HarnessError::Extinction { t, t_ext });
    }
    let eta = exact.eta(t);
    let ae = exact.a * eta;
    let be = exact.b * eta;
    let residuals: Vec<f64> = curve
        .vertices()
        .iter()
        .map(|v| (v.x * v.x / (ae * ae) + v.y * v.y / (be * be) - 1.0).abs())
        .collect();
    Ok(p.reduce(&residuals))
}

/// Uniform parameter points on an `a:b` ellipse.
pub fn ellipse_polygon(a: f64, b: f64, n: usize) -> PolygonalCurve {
    let v = (0..n)
        .map(|i| {
            let z = 2.0 * std::f64::consts::PI * (i as f64) / (n as f64);
            Vec2::new(a * z.cos(), b * z.sin())
        })
        .collect();
    PolygonalCurve::new(v).expect("ellipse polygon is valid")
}

/// One grid row of the convergence table: errors and orders for every
/// `(p, q)` pair at a fixed `N` and shape parameter epsilon.
#[derive(Clone, Debug)]
pub struct EocRow {
    pub epsilon: f64,
    pub n: usize,
    /// `e[pi][qi]` indexed by `PNorm::ALL`.
    pub e: [[f64; 3]; 3],
    pub eoc: [[Option<f64>; 3]; 3],
}

#[derive(Clone, Debug, Default)]
pub struct EocTable {
    pub rows: Vec<EocRow>,
}

impl EocTable {
    pub fn row(&self, epsilon: f64, n: usize) -> Option<&EocRow> {
        self.rows
            .iter()
            .find(|r| r.n == n && (r.epsilon - epsilon).abs() < 1e-12)
    }

    /// CSV in the table layout of the experiments: one block per epsilon,
    /// rows (N, p) with error and order columns per q.
    pub fn to_csv(&self, epsilon: f64) -> String {
        let mut out = String::from("N,p,E_p_1,EOC_p_1,E_p_2,EOC_p_2,E_p_inf,EOC_p_inf\n");
        for row in self.rows.iter().filter(|r| (r.epsilon - epsilon).abs() < 1e-12) {
            for (pi, p) in PNorm::ALL.iter().enumerate() {
                out.push_str(&format!("{},{}", row.n, p.label()));
                for qi in 0..3 {
                    out.push_str(&format!(",{:.16e}", row.e[pi][qi]));
                    match row.eoc[pi][qi] {
                        Some(o) => out.push_str(&format!(",{o:.3}")),
                        None => out.push(','),
                    }
                }
                out.push('\n');
            }
        }
        out
    }
}

/// Errors of one affine-flow run sampled at `t_j = t_m j / m`, `j = 0..m-1`.
///
/// The run uses the uniform initial discretization, fixed `tau = 0.1 N^{-2}`
/// and relaxation constants `kappa1 = kappa2 = 100`; at each sample the state
/// at the last step time not beyond `t_j` is compared against the exact
/// solution at that same step time. The sample window matches the
/// discrepancy norms: m samples starting at t = 0.
pub fn affine_flow_errors(
    n: usize,
    epsilon: f64,
    t_m: f64,
    m: usize,
) -> Result<[[f64; 3]; 3], HarnessError> {
    let exact = AffineExact::new(3.0, 1.0);
    if t_m >= exact.extinction_time() {
        return Err(HarnessError::Extinction { t: t_m, t_ext: exact.extinction_time() });
    }
    if m < 2 {
        return Err(HarnessError::BadSampling("need at least two samples"));
    }
    let curve0 = ellipse_polygon(exact.a, exact.b, n);
    let law = exact.law();
    let shape = ShapeSpec::smoothed(epsilon).map_err(|e| HarnessError::Step(e.to_string()))?;
    let params = RedistParams::new(shape, 100.0, 100.0).unwrap();
    let tau = 0.1 / (n as f64 * n as f64);
    let t_last = t_m * (m as f64 - 1.0) / m as f64;
    let ctrl = StepControl {
        mode: TimeStepMode::Fixed { tau },
        snapshot_interval: t_m / m as f64,
    };
    let stop = StopRule::caps(t_last * (1.0 + 1e-9), u64::MAX);
    let traj = evolve(&curve0, &law, &params, &ctrl, &stop)?;
    if traj.snapshots.len() < m {
        return Err(HarnessError::IncompleteRun { expected: m, got: traj.snapshots.len() });
    }

    let mut per_time: [Vec<f64>; 3] =
        [Vec::with_capacity(m), Vec::with_capacity(m), Vec::with_capacity(m)];
    for snap in &traj.snapshots[..m] {
        for (pi, p) in PNorm::ALL.iter().enumerate() {
            per_time[pi].push(err_p(&snap.curve, &exact, snap.time, *p)?);
        }
    }
    let mut e = [[0.0; 3]; 3];
    for pi in 0..3 {
        for (qi, q) in PNorm::ALL.iter().enumerate() {
            e[pi][qi] = q.reduce(&per_time[pi]);
        }
    }
    Ok(e)
}

/// Run the full convergence study over grids and shape parameters.
///
/// Cells are independent evolutions and run on worker threads; the table is
/// assembled by key afterwards. A failing cell aborts only its row.
pub fn eoc_suite(
    n_list: &[usize],
    eps_list: &[f64],
    t_m: f64,
    m: usize,
) -> Result<EocTable, HarnessError> {
    for w in n_list.windows(2) {
        if w[1] != 2 * w[0] {
            return Err(HarnessError::NotDoubling);
        }
    }
    let mut cells: Vec<(f64, usize)> = Vec::new();
    for &eps in eps_list {
        for &n in n_list {
            cells.push((eps, n));
        }
    }
    let results: Vec<Result<[[f64; 3]; 3], HarnessError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = cells
            .iter()
            .map(|&(eps, n)| scope.spawn(move || affine_flow_errors(n, eps, t_m, m)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("cell panicked")).collect()
    });

    let mut table = EocTable::default();
    for (&(eps, n), result) in cells.iter().zip(results) {
        let e = result?;
        let eoc = {
            let prev = table.rows.iter().find(|r| {
                (r.epsilon - eps).abs() < 1e-12 && r.n * 2 == n
            });
            let mut eoc = [[None; 3]; 3];
            if let Some(prev) = prev {
                for pi in 0..3 {
                    for qi in 0..3 {
                        eoc[pi][qi] = Some((prev.e[pi][qi] / e[pi][qi]).log2());
                    }
                }
            }
            eoc
        };
        table.rows.push(EocRow { epsilon: eps, n, e, eoc });
    }
    Ok(table)
}

/// One row of the discrepancy table.
#[derive(Clone, Debug)]
pub struct DiscrepancyRow {
    pub label: String,
    /// Length discrepancies for q = 1, 2, inf.
    pub d_l: [f64; 3],
    /// Area discrepancies for q = 1, 2, inf.
    pub d_a: [f64; 3],
}

#[derive(Clone, Debug, Default)]
pub struct DiscrepancyTable {
    pub rows: Vec<DiscrepancyRow>,
}

impl DiscrepancyTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("phi,DL_1,DL_2,DL_inf,DA_1,DA_2,DA_inf\n");
        for row in &self.rows {
            out.push_str(&row.label);
            for v in row.d_l.iter().chain(&row.d_a) {
                out.push_str(&format!(",{v:.16e}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Length/area discrepancies of one weighted-flow run for a given shape.
///
/// Samples are `t_j = T j / m` for `j = 0..m-1`; discrepancies compare the
/// polygon length and area against the exact shrinking ellipse
/// `L^t = eta(t) L^0` (quadrature) and `A^t = eta(t)^2 pi a b`.
pub fn weighted_flow_discrepancy(
    shape: ShapeSpec,
    n: usize,
    t_ext: f64,
    m: usize,
) -> Result<([f64; 3], [f64; 3]), HarnessError> {
    let exact = WeightedExact::new(3.0, 1.0, t_ext);
    let curve0 = ellipse_polygon(exact.a, exact.b, n);
    let law = exact.law();
    let params = RedistParams::new(shape, 100.0, 100.0).unwrap();
    let tau = 0.1 / (n as f64 * n as f64);
    let interval = t_ext / m as f64;
    let t_last = t_ext * (m as f64 - 1.0) / m as f64;
    let ctrl = StepControl { mode: TimeStepMode::Fixed { tau }, snapshot_interval: interval };
    let stop = StopRule::caps(t_last * (1.0 + 1e-9), u64::MAX);
    let traj = evolve(&curve0, &law, &params, &ctrl, &stop)?;
    if traj.snapshots.len() < m {
        return Err(HarnessError::IncompleteRun { expected: m, got: traj.snapshots.len() });
    }

    let reference = ParametricCurve::ellipse(exact.a, exact.b)
        .expect("valid ellipse");
    let l0 = reference.length();
    let a0 = std::f64::consts::PI * exact.a * exact.b;
    let mut dl = Vec::with_capacity(m);
    let mut da = Vec::with_capacity(m);
    for snap in &traj.snapshots[..m] {
        let eta = exact.eta(snap.time);
        dl.push((1.0 - snap.length / (eta * l0)).abs());
        da.push((1.0 - snap.area / (eta * eta * a0)).abs());
    }
    let mut out_l = [0.0; 3];
    let mut out_a = [0.0; 3];
    for (qi, q) in PNorm::ALL.iter().enumerate() {
        out_l[qi] = q.reduce(&dl);
        out_a[qi] = q.reduce(&da);
    }
    Ok((out_l, out_a))
}

/// Discrepancy table over a list of labeled shape functions.
pub fn discrepancy_suite(
    shapes: &[(String, ShapeSpec)],
    n: usize,
    t_ext: f64,
    m: usize,
) -> Result<DiscrepancyTable, HarnessError> {
    let results: Vec<Result<([f64; 3], [f64; 3]), HarnessError>> =
        std::thread::scope(|scope| {
            let handles: Vec<_> = shapes
                .iter()
                .map(|(_, shape)| {
                    let shape = *shape;
                    scope.spawn(move || weighted_flow_discrepancy(shape, n, t_ext, m))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("row panicked")).collect()
        });
    let mut table = DiscrepancyTable::default();
    for ((label, _), result) in shapes.iter().zip(results) {
        let (d_l, d_a) = result?;
        table.rows.push(DiscrepancyRow { label: label.clone(), d_l, d_a });
    }
    Ok(table)
}

/// The seven shape functions of the discrepancy experiment.
pub fn discrepancy_shapes() -> Vec<(String, ShapeSpec)> {
    vec![
        ("phi_0".into(), ShapeSpec::Smoothed { epsilon: 0.0 }),
        ("phi_0.1".into(), ShapeSpec::Smoothed { epsilon: 0.1 }),
        ("phi_0.5".into(), ShapeSpec::Smoothed { epsilon: 0.5 }),
        ("phi_0.9".into(), ShapeSpec::Smoothed { epsilon: 0.9 }),
        ("phi_1".into(), ShapeSpec::Smoothed { epsilon: 1.0 }),
        ("|k|^2/3".into(), ShapeSpec::power(2.0 / 3.0).unwrap()),
        ("|k|^1/3".into(), ShapeSpec::power(1.0 / 3.0).unwrap()),
    ]
}
