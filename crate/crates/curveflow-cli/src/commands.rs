//! Command implementations: building engine inputs from a [`RunConfig`] and
//! writing the result artifacts.

use std::f64::consts::TAU;
use std::fmt;
use std::path::{Path, PathBuf};

use curveflow::flowlaw::{make_builtin, FlowLaw};
use curveflow::geometry::{PolygonalCurve, Vec2};
use curveflow::harness::{discrepancy_suite, eoc_suite};
use curveflow::redistribution::{RedistParams, ShapeSpec};
use curveflow::segmentation::{geodesic_law, sharp_law, Domain, EdgeDetector, ImageField};
use curveflow::staticopt::{crystalline_points, defects, reparameterize, ParametricCurve};
use curveflow::stepper::{evolve, StepControl, StopRule, TimeStepMode, Trajectory};

use crate::config::{
    CurveKind, RunConfig, ShapeKind, StoppingKind,
};
use crate::csvio;
use crate::svg;

/// Errors classified by exit code: config 2, numerical 3, io 1.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Numerical(_) => "numerical",
            CliError::Io(_) => "io",
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) | CliError::Numerical(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

fn cfg_err(e: impl fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn num_err(e: impl fmt::Display) -> CliError {
    CliError::Numerical(e.to_string())
}

fn io_err(e: impl fmt::Display) -> CliError {
    CliError::Io(e.to_string())
}

fn paper_curve_a(u: f64) -> Vec2 {
    let z = TAU * u;
    let x1 = z.cos();
    let x3 = (3.0 * z).sin() * z.sin();
    Vec2::new(x1, 0.7 * z.sin() + x1.sin() + x3 * x3)
}

fn paper_curve_b(u: f64) -> Vec2 {
    let z = TAU * u;
    let x1 = 1.5 * z.cos();
    let x3 = (3.0 * z).sin() * z.sin();
    let x4 = 2.0 * x1 * x1;
    let x5 = 3.0 * (-x1).exp();
    Vec2::new(
        x1,
        1.5 * (0.6 * z.sin() + 0.5 * x3 * x3 + 0.4 * x4.sin() + 0.1 * x5.sin()),
    )
}

fn sampled_curve(f: impl Fn(f64) -> Vec2, n: usize) -> Result<PolygonalCurve, CliError> {
    let v = (0..n).map(|i| f(i as f64 / n as f64)).collect();
    PolygonalCurve::new(v).map_err(cfg_err)
}

pub fn build_curve(cfg: &RunConfig) -> Result<PolygonalCurve, CliError> {
    let n = cfg.curve.n;
    match cfg.curve.kind {
        CurveKind::Circle => {
            let r = cfg.curve.radius;
            sampled_curve(|u| Vec2::new(r * (TAU * u).cos(), r * (TAU * u).sin()), n)
        }
        CurveKind::Ellipse => {
            let (a, b) = (cfg.curve.a, cfg.curve.b);
            sampled_curve(|u| Vec2::new(a * (TAU * u).cos(), b * (TAU * u).sin()), n)
        }
        CurveKind::PaperCurveA => sampled_curve(paper_curve_a, n),
        CurveKind::PaperCurveB => sampled_curve(paper_curve_b, n),
        CurveKind::PointsCsv => {
            let path = cfg
                .curve
                .path
                .as_ref()
                .ok_or_else(|| CliError::Config("curve.path required for points_csv".into()))?;
            let text = std::fs::read_to_string(path).map_err(io_err)?;
            let points = csvio::read_points_csv(&text).map_err(cfg_err)?;
            csvio::curve_from_points(points).map_err(cfg_err)
        }
    }
}

fn load_image(cfg: &RunConfig) -> Result<ImageField, CliError> {
    let path = cfg
        .image
        .path
        .as_ref()
        .ok_or_else(|| CliError::Config("image.path required for image-driven laws".into()))?;
    let domain = Domain::new(cfg.image.x_min, cfg.image.x_max, cfg.image.y_min, cfg.image.y_max)
        .map_err(cfg_err)?;
    ImageField::from_pgm(Path::new(path), domain, cfg.image.sigma).map_err(cfg_err)
}

pub fn build_law(cfg: &RunConfig) -> Result<FlowLaw, CliError> {
    match cfg.law.name.as_str() {
        "geodesic" => {
            let field = load_image(cfg)?;
            let detector = if cfg.image.exponential_detector {
                EdgeDetector::Exponential
            } else {
                EdgeDetector::Rational
            };
            Ok(geodesic_law(&field, detector))
        }
        "sharp" => {
            let field = load_image(cfg)?;
            sharp_law(&field, cfg.image.f_max, cfg.image.f_min).map_err(cfg_err)
        }
        name => make_builtin(name, &cfg.law.params).map_err(cfg_err),
    }
}

pub fn build_shape(cfg: &RunConfig) -> Result<ShapeSpec, CliError> {
    match cfg.redistribution.shape {
        ShapeKind::Smoothed => ShapeSpec::smoothed(cfg.redistribution.epsilon).map_err(cfg_err),
        ShapeKind::Power => ShapeSpec::power(cfg.redistribution.p).map_err(cfg_err),
        ShapeKind::Unit => Ok(ShapeSpec::Unit),
        ShapeKind::Crystalline => Err(CliError::Config(
            "redistribution.shape = crystalline only applies to the redistribute command".into(),
        )),
    }
}

fn build_redist(cfg: &RunConfig) -> Result<RedistParams, CliError> {
    RedistParams::new(build_shape(cfg)?, cfg.redistribution.kappa1, cfg.redistribution.kappa2)
        .map_err(cfg_err)
}

fn build_ctrl(cfg: &RunConfig) -> StepControl {
    let mode = if cfg.stepping.adaptive {
        TimeStepMode::Adaptive { lambda: cfg.stepping.lambda }
    } else {
        let n = cfg.curve.n as f64;
        TimeStepMode::Fixed { tau: cfg.stepping.tau.unwrap_or(0.1 / (n * n)) }
    };
    StepControl { mode, snapshot_interval: cfg.stepping.snapshot_interval }
}

fn build_stop(cfg: &RunConfig) -> StopRule {
    let base = StopRule::caps(cfg.stopping.max_time, cfg.stopping.max_steps);
    match cfg.stopping.mode {
        StoppingKind::RelativeStationary => StopRule::stationary(
            cfg.stopping.delta,
            cfg.stopping.max_time,
            cfg.stopping.max_steps,
        ),
        StoppingKind::AreaFraction => StopRule::area_fraction(
            cfg.stopping.delta,
            cfg.stopping.max_time,
            cfg.stopping.max_steps,
        ),
        StoppingKind::None => base,
    }
}

fn write_artifact(dir: &Path, name: &str, content: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    std::fs::write(&path, content).map_err(io_err)?;
    Ok(path)
}

fn run_evolution(cfg: &RunConfig, law: &FlowLaw) -> Result<Trajectory, CliError> {
    let curve = build_curve(cfg)?;
    let params = build_redist(cfg)?;
    let ctrl = build_ctrl(cfg);
    let stop = build_stop(cfg);
    evolve(&curve, law, &params, &ctrl, &stop).map_err(num_err)
}

fn summarize(traj: &Trajectory) -> String {
    format!(
        "terminated: {} at t = {:.6} after {} steps; final length {:.6}, area {:.6}",
        traj.termination,
        traj.final_time,
        traj.steps,
        traj.final_state.length,
        traj.final_state.area
    )
}

/// `evolve`: snapshots CSV plus trajectory SVG.
pub fn cmd_evolve(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let law = build_law(cfg)?;
    let traj = run_evolution(cfg, &law)?;
    let mut written = Vec::new();
    if cfg.output.csv {
        written.push(write_artifact(out, "snapshots.csv", &csvio::write_snapshots(&traj))?);
    }
    if cfg.output.svg {
        let doc = svg::render_trajectory(&traj).map_err(num_err)?;
        written.push(write_artifact(out, "trajectory.svg", &doc)?);
    }
    println!("{}", summarize(&traj));
    Ok(written)
}

/// `segment`: like evolve but the law comes from the image and the SVG gets
/// the raster underlay.
pub fn cmd_segment(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let name = cfg.law.name.as_str();
    if name != "geodesic" && name != "sharp" {
        return Err(CliError::Config(
            "segment requires law.name = geodesic or sharp".into(),
        ));
    }
    let field = load_image(cfg)?;
    let law = build_law(cfg)?;
    let traj = run_evolution(cfg, &law)?;
    let mut written = Vec::new();
    if cfg.output.csv {
        written.push(write_artifact(out, "snapshots.csv", &csvio::write_snapshots(&traj))?);
    }
    if cfg.output.svg {
        let doc = svg::render_segmentation(&traj, &field).map_err(io_err)?;
        written.push(write_artifact(out, "segment.svg", &doc)?);
    }
    println!("{}", summarize(&traj));
    Ok(written)
}

/// `eoc`: one convergence table CSV per epsilon.
pub fn cmd_eoc(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let table = eoc_suite(
        &cfg.eoc.n_list,
        &cfg.eoc.epsilons,
        cfg.eoc.t_max,
        cfg.eoc.samples,
    )
    .map_err(num_err)?;
    let mut written = Vec::new();
    for eps in &cfg.eoc.epsilons {
        let name = format!("eoc_eps{eps}.csv");
        written.push(write_artifact(out, &name, &table.to_csv(*eps))?);
    }
    Ok(written)
}

/// `discrepancy`: the length/area discrepancy table over the configured
/// smoothed and power shapes.
pub fn cmd_discrepancy(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut shapes = Vec::new();
    for eps in &cfg.discrepancy.epsilons {
        shapes.push((
            format!("phi_{eps}"),
            ShapeSpec::smoothed(*eps).map_err(cfg_err)?,
        ));
    }
    for p in &cfg.discrepancy.powers {
        shapes.push((format!("|k|^{p}"), ShapeSpec::power(*p).map_err(cfg_err)?));
    }
    let table = discrepancy_suite(
        &shapes,
        cfg.discrepancy.n,
        cfg.discrepancy.t_ext,
        cfg.discrepancy.samples,
    )
    .map_err(num_err)?;
    Ok(vec![write_artifact(out, "discrepancy.csv", &table.to_csv())?])
}

fn parametric_curve(cfg: &RunConfig) -> Result<ParametricCurve, CliError> {
    match cfg.curve.kind {
        CurveKind::Circle => ParametricCurve::circle(cfg.curve.radius).map_err(cfg_err),
        CurveKind::Ellipse => {
            ParametricCurve::ellipse(cfg.curve.a, cfg.curve.b).map_err(cfg_err)
        }
        CurveKind::PaperCurveA => Ok(ParametricCurve::from_position_fn(paper_curve_a)),
        CurveKind::PaperCurveB => Ok(ParametricCurve::from_position_fn(paper_curve_b)),
        CurveKind::PointsCsv => Err(CliError::Config(
            "redistribute needs a smooth curve kind, not points_csv".into(),
        )),
    }
}

/// `redistribute`: place N points on the configured smooth curve, report the
/// defects row and write the points.
pub fn cmd_redistribute(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let curve = parametric_curve(cfg)?;
    let n = cfg.curve.n;
    let (label, points) = match cfg.redistribution.shape {
        ShapeKind::Crystalline => {
            let (a, b) = match cfg.curve.kind {
                CurveKind::Ellipse => (cfg.curve.a, cfg.curve.b),
                CurveKind::Circle => (cfg.curve.radius, cfg.curve.radius),
                _ => {
                    return Err(CliError::Config(
                        "crystalline redistribution needs an ellipse or circle".into(),
                    ))
                }
            };
            (
                "crystalline".to_string(),
                crystalline_points(a, b, n).map_err(num_err)?,
            )
        }
        ShapeKind::Unit => (
            "uniform".to_string(),
            reparameterize(&curve, &ShapeSpec::Unit, n).map_err(num_err)?,
        ),
        ShapeKind::Smoothed => {
            let shape = ShapeSpec::smoothed(cfg.redistribution.epsilon).map_err(cfg_err)?;
            (
                format!("smoothed_eps{}", cfg.redistribution.epsilon),
                reparameterize(&curve, &shape, n).map_err(num_err)?,
            )
        }
        ShapeKind::Power => {
            let shape = ShapeSpec::power(cfg.redistribution.p).map_err(cfg_err)?;
            (
                format!("power_{}", cfg.redistribution.p),
                reparameterize(&curve, &shape, n).map_err(num_err)?,
            )
        }
    };
    let (dl, da) = defects(&curve, &points).map_err(num_err)?;
    println!("{label}: N = {n}, Delta_L = {dl:.5}, Delta_A = {da:.5}");
    let mut written = Vec::new();
    if cfg.output.csv {
        written.push(write_artifact(out, "points.csv", &csvio::write_points(&points))?);
        written.push(write_artifact(
            out,
            "defects.csv",
            &csvio::write_defects(&[(label, n, dl, da)]),
        )?);
    }
    if cfg.output.svg {
        let doc = svg::render_points(&points).map_err(num_err)?;
        written.push(write_artifact(out, "points.svg", &doc)?);
    }
    Ok(written)
}

/// Dispatch one command; returns the artifact paths written.
pub fn run(command: &str, cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(out).map_err(io_err)?;
    match command {
        "evolve" => cmd_evolve(cfg, out),
        "eoc" => cmd_eoc(cfg, out),
        "discrepancy" => cmd_discrepancy(cfg, out),
        "redistribute" => cmd_redistribute(cfg, out),
        "segment" => cmd_segment(cfg, out),
        other => Err(CliError::Config(format!(
            "unknown command '{other}'; expected evolve|eoc|discrepancy|redistribute|segment"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config_with_overrides;
    use curveflow::geometry::enclosed_area;

    fn parse_config(text: &str) -> Result<RunConfig, crate::config::ConfigError> {
        parse_config_with_overrides(text, &[])
    }

    #[test]
    fn paper_curves_are_valid_positively_oriented() {
        for f in [paper_curve_a as fn(f64) -> Vec2, paper_curve_b] {
            let curve = sampled_curve(f, 100).expect("valid curve");
            assert!(enclosed_area(&curve) > 0.0);
        }
    }

    #[test]
    fn default_tau_follows_grid_size() {
        let cfg = parse_config("curve.n = 50\n").unwrap();
        match build_ctrl(&cfg).mode {
            TimeStepMode::Fixed { tau } => {
                assert!((tau - 0.1 / 2500.0).abs() < 1e-18);
            }
            _ => panic!("expected fixed stepping"),
        }
    }

    #[test]
    fn crystalline_shape_rejected_outside_redistribute() {
        let cfg = parse_config("redistribution.shape = crystalline\n").unwrap();
        assert!(matches!(build_shape(&cfg), Err(CliError::Config(_))));
    }
}
