//! Image-driven flow laws for active-contour segmentation.
//!
//! An [`ImageField`] wraps a pixel intensity grid over a physical rectangle.
//! Sampling goes through bilinear interpolation of an optionally Gaussian
//! presmoothed grid; gradients come from central differences of that grid and
//! are interpolated the same way, so every derived quantity is smooth enough
//! to drive the curve evolution. The two laws built here are the geodesic
//! gradient flow `beta = gamma(x) k - grad gamma(x) . n` with
//! `gamma = f(|grad I|)`, and the sharp-image forcing
//! `beta = k + F_max - (F_max - F_min) I(x)`.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use crate::flowlaw::FlowLaw;
use crate::geometry::Vec2;

#[derive(Clone, Debug, PartialEq)]
pub enum ImageError {
    Io(String),
    MalformedHeader(String),
    UnsupportedDepth(u32),
    TruncatedPayload { expected: usize, got: usize },
    BadIntensity { index: usize, value: f64 },
    DegenerateDomain,
    BadForceRange,
}

impl fmt::Display for ImageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ImageError::Io(msg) => write!(f, "image io error: {msg}"),
            ImageError::MalformedHeader(msg) => write!(f, "malformed PGM header: {msg}"),
            ImageError::UnsupportedDepth(d) => {
                write!(f, "unsupported PGM maxval {d}, expected 255")
            }
            ImageError::TruncatedPayload { expected, got } => {
                write!(f, "truncated PGM payload: expected {expected} samples, got {got}")
            }
            ImageError::BadIntensity { index, value } => {
                write!(f, "intensity {value} at index {index} outside [0, 1]")
            }
            ImageError::DegenerateDomain => write!(f, "degenerate physical domain"),
            ImageError::BadForceRange => write!(f, "sharp law requires F_max > 0 > F_min"),
        }
    }
}

impl std::error::Error for ImageError {}

/// Physical rectangle covered by a grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Domain {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Domain {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self, ImageError> {
        if !(x_max > x_min) || !(y_max > y_min) {
            return Err(ImageError::DegenerateDomain);
        }
        Ok(Domain { x_min, x_max, y_min, y_max })
    }

    /// Default domain `[-1.5, 1.5]^2`.
    pub fn symmetric() -> Self {
        Domain { x_min: -1.5, x_max: 1.5, y_min: -1.5, y_max: 1.5 }
    }
}

/// A scalar field sampled at pixel centers, row 0 at the top of the domain.
#[derive(Clone, Debug)]
pub struct ScalarGrid {
    width: usize,
    height: usize,
    domain: Domain,
    data: Vec<f64>,
}

impl ScalarGrid {
    pub fn new(width: usize, height: usize, domain: Domain, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), width * height);
        ScalarGrid { width, height, domain, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    fn at(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    fn spacing_x(&self) -> f64 {
        (self.domain.x_max - self.domain.x_min) / self.width as f64
    }

    fn spacing_y(&self) -> f64 {
        (self.domain.y_max - self.domain.y_min) / self.height as f64
    }

    /// Bilinear interpolation at a physical point, clamped to the grid.
    pub fn sample(&self, p: Vec2) -> f64 {
        let sx = self.spacing_x();
        let sy = self.spacing_y();
        // Continuous pixel coordinates with pixel centers at integers.
        let u = ((p.x - self.domain.x_min) / sx - 0.5).clamp(0.0, (self.width - 1) as f64);
        let v = ((self.domain.y_max - p.y) / sy - 0.5).clamp(0.0, (self.height - 1) as f64);
        let c0 = u.floor() as usize;
        let r0 = v.floor() as usize;
        let c1 = (c0 + 1).min(self.width - 1);
        let r1 = (r0 + 1).min(self.height - 1);
        let fu = u - c0 as f64;
        let fv = v - r0 as f64;
        let top = self.at(r0, c0) * (1.0 - fu) + self.at(r0, c1) * fu;
        let bot = self.at(r1, c0) * (1.0 - fu) + self.at(r1, c1) * fu;
        top * (1.0 - fv) + bot * fv
    }

    /// Central-difference gradient grids (per physical length).
    ///
    /// Boundary pixels fall back to one-sided differences over the actual
    /// span between the clamped neighbors.
    fn gradient_grids(&self) -> (ScalarGrid, ScalarGrid) {
        let (w, h) = (self.width, self.height);
        let sx = self.spacing_x();
        let sy = self.spacing_y();
        let mut gx = vec![0.0; w * h];
        let mut gy = vec![0.0; w * h];
        for r in 0..h {
            for c in 0..w {
                let cl = c.saturating_sub(1);
                let cr = (c + 1).min(w - 1);
                gx[r * w + c] = (self.at(r, cr) - self.at(r, cl)) / ((cr - cl) as f64 * sx);
                let ru = r.saturating_sub(1);
                let rd = (r + 1).min(h - 1);
                // Row index grows downward while y grows upward.
                gy[r * w + c] = (self.at(ru, c) - self.at(rd, c)) / ((rd - ru) as f64 * sy);
            }
        }
        (
            ScalarGrid::new(w, h, self.domain, gx),
            ScalarGrid::new(w, h, self.domain, gy),
        )
    }

    /// Separable Gaussian smoothing with standard deviation `sigma` pixels,
    /// kernel truncated at `3 sigma`, borders replicated.
    fn smoothed(&self, sigma: f64) -> ScalarGrid {
        if sigma <= 0.0 {
            return self.clone();
        }
        let radius = (3.0 * sigma).ceil() as isize;
        let mut kernel = Vec::with_capacity((2 * radius + 1) as usize);
        for k in -radius..=radius {
            kernel.push((-((k * k) as f64) / (2.0 * sigma * sigma)).exp());
        }
        let total: f64 = kernel.iter().sum();
        for w in &mut kernel {
            *w /= total;
        }
        let (w, h) = (self.width as isize, self.height as isize);
        let mut tmp = vec![0.0; self.data.len()];
        for r in 0..h {
            for c in 0..w {
                let mut acc = 0.0;
                for (ki, kw) in kernel.iter().enumerate() {
                    let cc = (c + ki as isize - radius).clamp(0, w - 1);
                    acc += kw * self.at(r as usize, cc as usize);
                }
                tmp[(r * w + c) as usize] = acc;
            }
        }
        let mut out = vec![0.0; self.data.len()];
        for r in 0..h {
            for c in 0..w {
                let mut acc = 0.0;
                for (ki, kw) in kernel.iter().enumerate() {
                    let rr = (r + ki as isize - radius).clamp(0, h - 1);
                    acc += kw * tmp[(rr * w + c) as usize];
                }
                out[(r * w + c) as usize] = acc;
            }
        }
        ScalarGrid::new(self.width, self.height, self.domain, out)
    }
}

/// Pixel intensity grid with bilinear sampling and gradients.
#[derive(Clone, Debug)]
pub struct ImageField {
    raw: Arc<ScalarGrid>,
    smoothed: Arc<ScalarGrid>,
    grad_x: Arc<ScalarGrid>,
    grad_y: Arc<ScalarGrid>,
    sigma: f64,
}

impl ImageField {
    /// Build a field from row-major intensities in `[0, 1]`.
    pub fn new(
        width: usize,
        height: usize,
        intensities: Vec<f64>,
        domain: Domain,
        sigma: f64,
    ) -> Result<Self, ImageError> {
        if width == 0 || height == 0 || intensities.len() != width * height {
            return Err(ImageError::TruncatedPayload {
                expected: width * height,
                got: intensities.len(),
            });
        }
        for (i, &v) in intensities.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(ImageError::BadIntensity { index: i, value: v });
            }
        }
        let raw = ScalarGrid::new(width, height, domain, intensities);
        let smoothed = raw.smoothed(sigma);
        let (gx, gy) = smoothed.gradient_grids();
        Ok(ImageField {
            raw: Arc::new(raw),
            smoothed: Arc::new(smoothed),
            grad_x: Arc::new(gx),
            grad_y: Arc::new(gy),
            sigma,
        })
    }

    /// Load an 8-bit PGM (P2 ASCII or P5 binary) file.
    pub fn from_pgm(path: &Path, domain: Domain, sigma: f64) -> Result<Self, ImageError> {
        let bytes = std::fs::read(path).map_err(|e| ImageError::Io(e.to_string()))?;
        let (w, h, data) = parse_pgm(&bytes)?;
        ImageField::new(w, h, data, domain, sigma)
    }

    pub fn width(&self) -> usize {
        self.raw.width
    }

    pub fn height(&self) -> usize {
        self.raw.height
    }

    pub fn domain(&self) -> Domain {
        self.raw.domain
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn raw_intensities(&self) -> &[f64] {
        &self.raw.data
    }

    /// Intensity and gradient at a physical point (clamped at the boundary).
    pub fn sample(&self, p: Vec2) -> (f64, Vec2) {
        let i = self.smoothed.sample(p);
        let g = Vec2::new(self.grad_x.sample(p), self.grad_y.sample(p));
        (i, g)
    }
}

/// Parse an 8-bit PGM image; returns width, height and intensities in [0, 1].
pub fn parse_pgm(bytes: &[u8]) -> Result<(usize, usize, Vec<f64>), ImageError> {
    if bytes.len() < 2 {
        return Err(ImageError::MalformedHeader("file too short".into()));
    }
    let magic = &bytes[..2];
    let binary = match magic {
        b"P2" => false,
        b"P5" => true,
        _ => {
            return Err(ImageError::MalformedHeader(format!(
                "bad magic {:?}",
                String::from_utf8_lossy(magic)
            )))
        }
    };
    let mut pos = 2usize;
    let mut header = [0u64; 3];
    let mut found = 0usize;
    while found < 3 {
        // Skip whitespace and '#' comments.
        while pos < bytes.len() {
            match bytes[pos] {
                b' ' | b'\t' | b'\r' | b'\n' => pos += 1,
                b'#' => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(ImageError::MalformedHeader("expected integer".into()));
        }
        let text = std::str::from_utf8(&bytes[start..pos])
            .map_err(|_| ImageError::MalformedHeader("non-ascii header".into()))?;
        header[found] = text
            .parse()
            .map_err(|_| ImageError::MalformedHeader(format!("bad integer '{text}'")))?;
        found += 1;
    }
    let (w, h, maxval) = (header[0] as usize, header[1] as usize, header[2] as u32);
    if w == 0 || h == 0 {
        return Err(ImageError::MalformedHeader("zero dimension".into()));
    }
    if maxval != 255 {
        return Err(ImageError::UnsupportedDepth(maxval));
    }
    let expected = w * h;
    let mut data = Vec::with_capacity(expected);
    if binary {
        // Exactly one whitespace byte separates the header from the payload.
        if pos >= bytes.len() {
            return Err(ImageError::TruncatedPayload { expected, got: 0 });
        }
        pos += 1;
        let payload = &bytes[pos..];
        if payload.len() < expected {
            return Err(ImageError::TruncatedPayload { expected, got: payload.len() });
        }
        data.extend(payload[..expected].iter().map(|&b| b as f64 / 255.0));
    } else {
        let text = std::str::from_utf8(&bytes[pos..])
            .map_err(|_| ImageError::MalformedHeader("non-ascii P2 payload".into()))?;
        for tok in text.split_ascii_whitespace() {
            if data.len() == expected {
                break;
            }
            let v: u32 = tok
                .parse()
                .map_err(|_| ImageError::MalformedHeader(format!("bad sample '{tok}'")))?;
            if v > 255 {
                return Err(ImageError::MalformedHeader(format!("sample {v} > 255")));
            }
            data.push(v as f64 / 255.0);
        }
        if data.len() != expected {
            return Err(ImageError::TruncatedPayload { expected, got: data.len() });
        }
    }
    Ok((w, h, data))
}

/// Edge detector `f(s)` turning gradient magnitude into an energy density.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeDetector {
    /// `f(s) = 1 / (1 + s^2)`.
    Rational,
    /// `f(s) = exp(-s)`.
    Exponential,
}

impl EdgeDetector {
    pub fn apply(self, s: f64) -> f64 {
        match self {
            EdgeDetector::Rational => 1.0 / (1.0 + s * s),
            EdgeDetector::Exponential => (-s).exp(),
        }
    }
}

/// Sampled energy density `gamma` and its gradient for the geodesic law.
#[derive(Clone, Debug)]
pub struct GeodesicLaw {
    gamma: Arc<ScalarGrid>,
    grad_x: Arc<ScalarGrid>,
    grad_y: Arc<ScalarGrid>,
}

impl GeodesicLaw {
    pub fn weight(&self, x: Vec2) -> f64 {
        self.gamma.sample(x)
    }

    pub fn force(&self, x: Vec2, normal: Vec2) -> f64 {
        let grad = Vec2::new(self.grad_x.sample(x), self.grad_y.sample(x));
        -grad.dot(normal)
    }
}

/// Sampled intensity with the sharp forcing parameters.
#[derive(Clone, Debug)]
pub struct SharpLaw {
    intensity: Arc<ScalarGrid>,
    f_max: f64,
    f_min: f64,
}

impl SharpLaw {
    pub fn force(&self, x: Vec2) -> f64 {
        self.f_max - (self.f_max - self.f_min) * self.intensity.sample(x)
    }
}

/// Geodesic gradient flow `beta = gamma(x) k - grad gamma(x) . n` with
/// `gamma(x) = f(|grad I(x)|)`.
///
/// `gamma` is rasterized once at pixel centers and then treated as an image,
/// so its gradient comes from a second central-differencing pass rather than
/// nested chain-rule sampling.
pub fn geodesic_law(field: &ImageField, detector: EdgeDetector) -> FlowLaw {
    let gx = &field.grad_x;
    let gy = &field.grad_y;
    let (w, h) = (field.width(), field.height());
    let mut gamma = vec![0.0; w * h];
    for i in 0..w * h {
        let mag = gx.data[i].hypot(gy.data[i]);
        gamma[i] = detector.apply(mag);
    }
    let gamma = ScalarGrid::new(w, h, field.domain(), gamma);
    let (ggx, ggy) = gamma.gradient_grids();
    FlowLaw::Geodesic(GeodesicLaw {
        gamma: Arc::new(gamma),
        grad_x: Arc::new(ggx),
        grad_y: Arc::new(ggy),
    })
}

/// Sharp-image forcing `beta = k + F(x)`, `F = F_max - (F_max - F_min) I(x)`.
pub fn sharp_law(field: &ImageField, f_max: f64, f_min: f64) -> Result<FlowLaw, ImageError> {
    if !(f_max > 0.0 && f_min < 0.0) {
        return Err(ImageError::BadForceRange);
    }
    Ok(FlowLaw::Sharp(SharpLaw {
        intensity: Arc::clone(&field.smoothed),
        f_max,
        f_min,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_field(value: f64, w: usize, h: usize, sigma: f64) -> ImageField {
        ImageField::new(w, h, vec![value; w * h], Domain::symmetric(), sigma).unwrap()
    }

    #[test]
    fn parse_p2imagefield() {
        let text = b"P2\n# tiny\n2 2\n255\n0 255\n255 0\n";
        let (w, h, data) = parse_pgm(text).unwrap();
        assert_eq!((w, h), (2, 2));
        assert_eq!(data, vec![0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn parse_p5_binary() {
        let mut bytes = b"P5 3 2 255\n".to_vec();
        bytes.extend_from_slice(&[0, 128, 255, 255, 128, 0]);
        let (w, h, data) = parse_pgm(&bytes).unwrap();
        assert_eq!((w, h), (3, 2));
        assert!((data[1] - 128.0 / 255.0).abs() < 1e-15);
        assert_eq!(data[2], 1.0);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            parse_pgm(b"P6 2 2 255\n0000"),
            Err(ImageError::MalformedHeader(_))
        ));
        assert!(matches!(
            parse_pgm(b"P2 2 2 65535\n0 0 0 0"),
            Err(ImageError::UnsupportedDepth(65535))
        ));
        assert!(matches!(
            parse_pgm(b"P2 2 2 255\n0 0 0"),
            Err(ImageError::TruncatedPayload { expected: 4, got: 3 })
        ));
        let mut bytes = b"P5 2 2 255\n".to_vec();
        bytes.extend_from_slice(&[1, 2, 3]);
        assert!(matches!(
            parse_pgm(&bytes),
            Err(ImageError::TruncatedPayload { expected: 4, got: 3 })
        ));
    }

    #[test]
    fn constant_image_has_zero_gradient() {
        let field = constant_field(0.25, 16, 16, 0.0);
        for p in [Vec2::new(0.0, 0.0), Vec2::new(1.2, -0.7), Vec2::new(-2.0, 2.0)] {
            let (i, g) = field.sample(p);
            assert!((i - 0.25).abs() < 1e-15);
            assert_eq!(g.x, 0.0);
            assert_eq!(g.y, 0.0);
        }
    }

    #[test]
    fn linear_ramp_gradient_is_exact_inside() {
        // I = c * x1 rendered at pixel centers (scaled into [0, 1]).
        let (w, h) = (32, 32);
        let domain = Domain::symmetric();
        let sx = (domain.x_max - domain.x_min) / w as f64;
        let c = 1.0 / 3.0; // full range over the domain keeps values in [0, 1]
        let mut data = vec![0.0; w * h];
        for r in 0..h {
            for col in 0..w {
                let x = domain.x_min + (col as f64 + 0.5) * sx;
                data[r * w + col] = c * (x - domain.x_min);
            }
        }
        let field = ImageField::new(w, h, data, domain, 0.0).unwrap();
        for p in [Vec2::new(0.1, 0.2), Vec2::new(-0.5, 0.9), Vec2::new(0.77, -1.0)] {
            let (_, g) = field.sample(p);
            assert!((g.x - c).abs() < 1e-10, "gx = {} at {:?}", g.x, p);
            assert!(g.y.abs() < 1e-10);
        }
    }

    #[test]
    fn smoothing_attenuates_checkerboard_gradient() {
        // 2-pixel blocks; direct evaluation on the raw grid is the oracle.
        let (w, h) = (48, 48);
        let mut data = vec![0.0; w * h];
        for r in 0..h {
            for c in 0..w {
                data[r * w + c] = (((r / 2) + (c / 2)) % 2) as f64;
            }
        }
        let sharp = ImageField::new(w, h, data.clone(), Domain::symmetric(), 0.0).unwrap();
        let blurred = ImageField::new(w, h, data, Domain::symmetric(), 2.0).unwrap();
        let sx = 3.0 / w as f64;
        for r in 10..38 {
            for c in 10..38 {
                let p = Vec2::new(
                    -1.5 + (c as f64 + 0.5) * sx,
                    1.5 - (r as f64 + 0.5) * sx,
                );
                let g0 = sharp.sample(p).1.norm();
                let g2 = blurred.sample(p).1.norm();
                assert!(g2 < g0, "at ({r},{c}): smoothed {g2} vs raw {g0}");
            }
        }
    }

    #[test]
    fn geodesic_on_constant_image_is_scaled_shortening() {
        let field = constant_field(0.5, 8, 8, 0.0);
        let law = geodesic_law(&field, EdgeDetector::Rational);
        let e = law.eval(Vec2::new(0.3, 0.1), 0.7, 2.0).unwrap();
        assert!((e.w - 1.0).abs() < 1e-12); // f(0) = 1
        assert!(e.f.abs() < 1e-12);
        assert!((e.beta - 2.0).abs() < 1e-12);
        let exp = geodesic_law(&field, EdgeDetector::Exponential);
        let ee = exp.eval(Vec2::new(0.3, 0.1), 0.7, 2.0).unwrap();
        assert!((ee.w - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sharp_law_extreme_intensities() {
        let black = constant_field(0.0, 8, 8, 0.0);
        let law = sharp_law(&black, 30.0, -30.0).unwrap();
        assert!((law.force(Vec2::default(), 0.0).unwrap() - 30.0).abs() < 1e-12);
        let white = constant_field(1.0, 8, 8, 0.0);
        let law = sharp_law(&white, 30.0, -30.0).unwrap();
        assert!((law.force(Vec2::default(), 0.0).unwrap() + 30.0).abs() < 1e-12);
        assert!(matches!(sharp_law(&white, -1.0, -30.0), Err(ImageError::BadForceRange)));
    }
}
