//! Deterministic SVG rendering of trajectories and point sets.
//!
//! Coordinates are printed at fixed precision and elements are emitted in a
//! fixed order so identical inputs give byte-identical documents. World
//! coordinates map to SVG with the y axis flipped.

use std::fmt;
use std::fmt::Write as _;

use base64::Engine as _;
use curveflow::geometry::{PolygonalCurve, Vec2};
use curveflow::segmentation::ImageField;
use curveflow::stepper::Trajectory;

#[derive(Debug)]
pub enum SvgError {
    Empty,
    Encode(String),
}

impl fmt::Display for SvgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SvgError::Empty => write!(f, "nothing to render"),
            SvgError::Encode(msg) => write!(f, "image underlay encoding failed: {msg}"),
        }
    }
}

impl std::error::Error for SvgError {}

const CANVAS: f64 = 720.0;
const MARGIN: f64 = 20.0;

struct Frame {
    x_min: f64,
    y_max: f64,
    scale: f64,
}

impl Frame {
    fn fit(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Frame {
        let span = (x_max - x_min).max(y_max - y_min).max(1e-12);
        Frame {
            x_min,
            y_max,
            scale: (CANVAS - 2.0 * MARGIN) / span,
        }
    }

    fn map(&self, p: Vec2) -> (f64, f64) {
        (
            MARGIN + (p.x - self.x_min) * self.scale,
            MARGIN + (self.y_max - p.y) * self.scale,
        )
    }
}

fn bounds<'a>(curves: impl Iterator<Item = &'a PolygonalCurve>) -> (f64, f64, f64, f64) {
    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for curve in curves {
        for v in curve.vertices() {
            x_min = x_min.min(v.x);
            x_max = x_max.max(v.x);
            y_min = y_min.min(v.y);
            y_max = y_max.max(v.y);
        }
    }
    (x_min, x_max, y_min, y_max)
}

fn document(body: &str) -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <svg xmlns=\"http://www.w3.org/2000/svg\" xmlns:xlink=\"http://www.w3.org/1999/xlink\" \
         width=\"{CANVAS}\" height=\"{CANVAS}\" viewBox=\"0 0 {CANVAS} {CANVAS}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{body}</svg>\n"
    )
}

fn polyline(frame: &Frame, curve: &PolygonalCurve, stroke: &str, width: f64) -> String {
    let mut points = String::new();
    for v in curve.vertices() {
        let (x, y) = frame.map(*v);
        let _ = write!(points, "{x:.6},{y:.6} ");
    }
    // Close the loop.
    let (x, y) = frame.map(curve.vertices()[0]);
    let _ = write!(points, "{x:.6},{y:.6}");
    format!(
        "<polyline points=\"{points}\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"{width}\"/>\n"
    )
}

/// All snapshots as polylines, earliest faint, final curve emphasized.
pub fn render_trajectory(traj: &Trajectory) -> Result<String, SvgError> {
    if traj.snapshots.is_empty() {
        return Err(SvgError::Empty);
    }
    let (x_min, x_max, y_min, y_max) =
        bounds(traj.snapshots.iter().map(|s| &s.curve).chain(std::iter::once(&traj.final_state.curve)));
    let frame = Frame::fit(x_min, x_max, y_min, y_max);
    let mut body = String::new();
    for snap in &traj.snapshots {
        body.push_str(&polyline(&frame, &snap.curve, "#4477aa", 1.0));
    }
    body.push_str(&polyline(&frame, &traj.final_state.curve, "#cc3311", 2.0));
    Ok(document(&body))
}

/// A single point set as circles on a light outline of their polygon.
pub fn render_points(points: &[Vec2]) -> Result<String, SvgError> {
    if points.is_empty() {
        return Err(SvgError::Empty);
    }
    let curve = PolygonalCurve::new(points.to_vec()).ok();
    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for p in points {
        x_min = x_min.min(p.x);
        x_max = x_max.max(p.x);
        y_min = y_min.min(p.y);
        y_max = y_max.max(p.y);
    }
    let frame = Frame::fit(x_min, x_max, y_min, y_max);
    let mut body = String::new();
    if let Some(curve) = &curve {
        body.push_str(&polyline(&frame, curve, "#bbbbbb", 1.0));
    }
    for p in points {
        let (x, y) = frame.map(*p);
        let _ = write!(
            body,
            "<circle cx=\"{x:.6}\" cy=\"{y:.6}\" r=\"4\" fill=\"#cc3311\"/>\n"
        );
    }
    Ok(document(&body))
}

/// Trajectory over a grayscale raster underlay of the segmented image.
pub fn render_segmentation(traj: &Trajectory, field: &ImageField) -> Result<String, SvgError> {
    if traj.snapshots.is_empty() {
        return Err(SvgError::Empty);
    }
    let domain = field.domain();
    let frame = Frame::fit(domain.x_min, domain.x_max, domain.y_min, domain.y_max);
    let (w, h) = (field.width(), field.height());
    let pixels: Vec<u8> = field
        .raw_intensities()
        .iter()
        .map(|v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
        .collect();
    let img: image::GrayImage = image::ImageBuffer::from_raw(w as u32, h as u32, pixels)
        .ok_or_else(|| SvgError::Encode("raster size mismatch".into()))?;
    let mut png = std::io::Cursor::new(Vec::new());
    img.write_to(&mut png, image::ImageFormat::Png)
        .map_err(|e| SvgError::Encode(e.to_string()))?;
    let data = base64::engine::general_purpose::STANDARD.encode(png.into_inner());

    let (x0, y0) = frame.map(Vec2::new(domain.x_min, domain.y_max));
    let width = (domain.x_max - domain.x_min) * frame.scale;
    let height = (domain.y_max - domain.y_min) * frame.scale;
    let mut body = format!(
        "<image x=\"{x0:.6}\" y=\"{y0:.6}\" width=\"{width:.6}\" height=\"{height:.6}\" \
         xlink:href=\"data:image/png;base64,{data}\"/>\n"
    );
    for snap in &traj.snapshots {
        body.push_str(&polyline(&frame, &snap.curve, "#44aa77", 1.0));
    }
    body.push_str(&polyline(&frame, &traj.final_state.curve, "#cc3311", 2.0));
    Ok(document(&body))
}
