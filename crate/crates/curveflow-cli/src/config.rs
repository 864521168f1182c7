//! Flat `section.key = value` run configuration.
//!
//! Every scalar of the engine is one key; lists (grid sizes, epsilons) are
//! comma-separated values. Unknown keys, type mismatches and range
//! violations are reported with the offending key name.

use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug)]
pub enum ConfigError {
    UnknownKey(String),
    TypeMismatch { key: String, value: String, expected: &'static str },
    RangeViolation { key: String, message: String },
    BadLine { line: usize, text: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::UnknownKey(key) => write!(f, "unknown config key '{key}'"),
            ConfigError::TypeMismatch { key, value, expected } => {
                write!(f, "config key '{key}': cannot parse '{value}' as {expected}")
            }
            ConfigError::RangeViolation { key, message } => {
                write!(f, "config key '{key}': {message}")
            }
            ConfigError::BadLine { line, text } => {
                write!(f, "config line {line} is not 'section.key = value': '{text}'")
            }
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Debug, PartialEq)]
pub enum CurveKind {
    Circle,
    Ellipse,
    PaperCurveA,
    PaperCurveB,
    PointsCsv,
}

#[derive(Clone, Debug)]
pub struct CurveConfig {
    pub kind: CurveKind,
    pub a: f64,
    pub b: f64,
    pub radius: f64,
    pub n: usize,
    pub path: Option<String>,
}

#[derive(Clone, Debug)]
pub struct LawConfig {
    pub name: String,
    pub params: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ShapeKind {
    Smoothed,
    Power,
    Unit,
    Crystalline,
}

#[derive(Clone, Debug)]
pub struct RedistConfig {
    pub shape: ShapeKind,
    pub epsilon: f64,
    pub p: f64,
    pub kappa1: f64,
    pub kappa2: f64,
}

#[derive(Clone, Debug)]
pub struct SteppingConfig {
    pub adaptive: bool,
    /// Fixed step size; `None` defaults to `0.1 / N^2` at build time.
    pub tau: Option<f64>,
    pub lambda: f64,
    pub snapshot_interval: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum StoppingKind {
    RelativeStationary,
    AreaFraction,
    None,
}

#[derive(Clone, Debug)]
pub struct StoppingConfig {
    pub mode: StoppingKind,
    pub delta: f64,
    pub max_time: f64,
    pub max_steps: u64,
}

#[derive(Clone, Debug)]
pub struct OutputConfig {
    pub directory: Option<String>,
    pub csv: bool,
    pub svg: bool,
}

#[derive(Clone, Debug)]
pub struct ImageConfig {
    pub path: Option<String>,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub sigma: f64,
    pub f_max: f64,
    pub f_min: f64,
    pub exponential_detector: bool,
}

#[derive(Clone, Debug)]
pub struct EocConfig {
    pub n_list: Vec<usize>,
    pub epsilons: Vec<f64>,
    pub t_max: f64,
    pub samples: usize,
}

#[derive(Clone, Debug)]
pub struct DiscrepancyConfig {
    pub n: usize,
    pub t_ext: f64,
    pub samples: usize,
    pub epsilons: Vec<f64>,
    pub powers: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub curve: CurveConfig,
    pub law: LawConfig,
    pub redistribution: RedistConfig,
    pub stepping: SteppingConfig,
    pub stopping: StoppingConfig,
    pub output: OutputConfig,
    pub image: ImageConfig,
    pub eoc: EocConfig,
    pub discrepancy: DiscrepancyConfig,
}

/// Raw key-value text into a map; `#` starts a comment, blank lines skipped.
fn parse_lines(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::BadLine { line: idx + 1, text: raw.to_string() })?;
        let key = key.trim();
        if !key.contains('.') {
            return Err(ConfigError::BadLine { line: idx + 1, text: raw.to_string() });
        }
        map.insert(key.to_string(), value.trim().to_string());
    }
    Ok(map)
}

struct Extractor {
    map: BTreeMap<String, String>,
}

impl Extractor {
    fn take(&mut self, key: &str) -> Option<String> {
        self.map.remove(key)
    }

    fn float(&mut self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| ConfigError::TypeMismatch {
                key: key.to_string(),
                value: v,
                expected: "a real number",
            }),
        }
    }

    fn count(&mut self, key: &str, default: u64) -> Result<u64, ConfigError> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| ConfigError::TypeMismatch {
                key: key.to_string(),
                value: v,
                expected: "a nonnegative integer",
            }),
        }
    }

    fn float_list(&mut self, key: &str, default: &[f64]) -> Result<Vec<f64>, ConfigError> {
        match self.take(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|tok| {
                    tok.trim().parse().map_err(|_| ConfigError::TypeMismatch {
                        key: key.to_string(),
                        value: tok.trim().to_string(),
                        expected: "a comma-separated list of reals",
                    })
                })
                .collect(),
        }
    }

    fn count_list(&mut self, key: &str, default: &[usize]) -> Result<Vec<usize>, ConfigError> {
        match self.take(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|tok| {
                    tok.trim().parse().map_err(|_| ConfigError::TypeMismatch {
                        key: key.to_string(),
                        value: tok.trim().to_string(),
                        expected: "a comma-separated list of integers",
                    })
                })
                .collect(),
        }
    }
}

fn range_err(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::RangeViolation { key: key.to_string(), message: message.into() }
}

/// Parse and validate a configuration document, applying defaults;
/// `--set section.key=value` pairs are applied on top of the file values.
pub fn parse_config_with_overrides(
    text: &str,
    overrides: &[(String, String)],
) -> Result<RunConfig, ConfigError> {
    let mut map = parse_lines(text)?;
    for (k, v) in overrides {
        map.insert(k.clone(), v.clone());
    }
    let mut ex = Extractor { map };

    let curve_kind = match ex.take("curve.kind").as_deref().unwrap_or("circle") {
        "circle" => CurveKind::Circle,
        "ellipse" => CurveKind::Ellipse,
        "paper_curve_a" => CurveKind::PaperCurveA,
        "paper_curve_b" => CurveKind::PaperCurveB,
        "points_csv" => CurveKind::PointsCsv,
        other => {
            return Err(range_err(
                "curve.kind",
                format!("'{other}' is not one of circle|ellipse|paper_curve_a|paper_curve_b|points_csv"),
            ))
        }
    };
    let curve = CurveConfig {
        kind: curve_kind,
        a: ex.float("curve.a", 3.0)?,
        b: ex.float("curve.b", 1.0)?,
        radius: ex.float("curve.radius", 1.0)?,
        n: ex.count("curve.n", 100)? as usize,
        path: ex.take("curve.path"),
    };
    if curve.n < 3 {
        return Err(range_err("curve.n", "need at least 3 vertices"));
    }
    if !(curve.a > 0.0 && curve.b > 0.0) {
        return Err(range_err("curve.a", "ellipse axes must be positive"));
    }
    if !(curve.radius > 0.0) {
        return Err(range_err("curve.radius", "radius must be positive"));
    }

    let law_name = ex.take("law.name").unwrap_or_else(|| "curve_shortening".to_string());
    let mut params = BTreeMap::new();
    let law_keys: Vec<String> = ex
        .map
        .keys()
        .filter(|k| k.starts_with("law."))
        .cloned()
        .collect();
    for key in law_keys {
        let value = ex.map.remove(&key).unwrap();
        let parsed: f64 = value.parse().map_err(|_| ConfigError::TypeMismatch {
            key: key.clone(),
            value,
            expected: "a real number",
        })?;
        params.insert(key.trim_start_matches("law.").to_string(), parsed);
    }
    let law = LawConfig { name: law_name, params };

    let shape = match ex.take("redistribution.shape").as_deref().unwrap_or("smoothed") {
        "smoothed" => ShapeKind::Smoothed,
        "power" => ShapeKind::Power,
        "unit" => ShapeKind::Unit,
        "crystalline" => ShapeKind::Crystalline,
        other => {
            return Err(range_err(
                "redistribution.shape",
                format!("'{other}' is not one of smoothed|power|unit|crystalline"),
            ))
        }
    };
    let redistribution = RedistConfig {
        shape,
        epsilon: ex.float("redistribution.epsilon", 0.1)?,
        p: ex.float("redistribution.p", 1.0)?,
        kappa1: ex.float("redistribution.kappa1", 100.0)?,
        kappa2: ex.float("redistribution.kappa2", 100.0)?,
    };
    if !(0.0..=1.0).contains(&redistribution.epsilon) {
        return Err(range_err("redistribution.epsilon", "epsilon must lie in [0, 1]"));
    }
    if !(redistribution.p > 0.0) {
        return Err(range_err("redistribution.p", "exponent must be positive"));
    }
    if redistribution.kappa1 < 0.0 || redistribution.kappa2 < 0.0 {
        return Err(range_err("redistribution.kappa1", "relaxation constants must be >= 0"));
    }

    let adaptive = match ex.take("stepping.mode").as_deref().unwrap_or("fixed") {
        "fixed" => false,
        "adaptive" => true,
        other => {
            return Err(range_err(
                "stepping.mode",
                format!("'{other}' is not one of fixed|adaptive"),
            ))
        }
    };
    let tau = match ex.take("stepping.tau") {
        None => None,
        Some(v) => Some(v.parse::<f64>().map_err(|_| ConfigError::TypeMismatch {
            key: "stepping.tau".into(),
            value: v,
            expected: "a real number",
        })?),
    };
    let stepping = SteppingConfig {
        adaptive,
        tau,
        lambda: ex.float("stepping.lambda", 1.0)?,
        snapshot_interval: ex.float("stepping.snapshot_interval", 0.001)?,
    };
    if let Some(tau) = stepping.tau {
        if !(tau > 0.0) {
            return Err(range_err("stepping.tau", "tau must be positive"));
        }
    }
    if !(stepping.lambda > 0.0) {
        return Err(range_err("stepping.lambda", "lambda must be positive"));
    }
    if !(stepping.snapshot_interval > 0.0) {
        return Err(range_err("stepping.snapshot_interval", "interval must be positive"));
    }

    let stop_mode = match ex.take("stopping.mode").as_deref().unwrap_or("area_fraction") {
        "relative_stationary" => StoppingKind::RelativeStationary,
        "area_fraction" => StoppingKind::AreaFraction,
        "none" => StoppingKind::None,
        other => {
            return Err(range_err(
                "stopping.mode",
                format!("'{other}' is not one of relative_stationary|area_fraction|none"),
            ))
        }
    };
    let stopping = StoppingConfig {
        mode: stop_mode,
        delta: ex.float("stopping.delta", 0.01)?,
        max_time: ex.float("stopping.max_time", 1e9)?,
        max_steps: ex.count("stopping.max_steps", 50_000_000)?,
    };
    if stopping.mode != StoppingKind::None && !(stopping.delta > 0.0) {
        return Err(range_err("stopping.delta", "delta must be positive"));
    }

    let directory = ex.take("output.directory");
    let formats = ex.take("output.formats").unwrap_or_else(|| "csv,svg".to_string());
    let mut csv = false;
    let mut svg = false;
    for tok in formats.split(',') {
        match tok.trim() {
            "csv" => csv = true,
            "svg" => svg = true,
            "" => {}
            other => {
                return Err(range_err(
                    "output.formats",
                    format!("'{other}' is not one of csv|svg"),
                ))
            }
        }
    }
    let output = OutputConfig { directory, csv, svg };

    let image = ImageConfig {
        path: ex.take("image.path"),
        x_min: ex.float("image.x_min", -1.5)?,
        x_max: ex.float("image.x_max", 1.5)?,
        y_min: ex.float("image.y_min", -1.5)?,
        y_max: ex.float("image.y_max", 1.5)?,
        sigma: ex.float("image.sigma", 2.0)?,
        f_max: ex.float("image.f_max", 30.0)?,
        f_min: ex.float("image.f_min", -30.0)?,
        exponential_detector: match ex.take("image.detector").as_deref().unwrap_or("rational") {
            "rational" => false,
            "exponential" => true,
            other => {
                return Err(range_err(
                    "image.detector",
                    format!("'{other}' is not one of rational|exponential"),
                ))
            }
        },
    };
    if !(image.x_max > image.x_min && image.y_max > image.y_min) {
        return Err(range_err("image.x_min", "image domain is degenerate"));
    }
    if image.sigma < 0.0 {
        return Err(range_err("image.sigma", "sigma must be >= 0"));
    }

    let eoc = EocConfig {
        n_list: ex.count_list("eoc.n_list", &[16, 32, 64, 128, 256])?,
        epsilons: ex.float_list("eoc.epsilons", &[0.0, 0.1, 0.5, 0.9])?,
        t_max: ex.float("eoc.t_max", 1.5)?,
        samples: ex.count("eoc.samples", 200)? as usize,
    };
    let discrepancy = DiscrepancyConfig {
        n: ex.count("discrepancy.n", 100)? as usize,
        t_ext: ex.float("discrepancy.t_ext", 1.0)?,
        samples: ex.count("discrepancy.samples", 200)? as usize,
        epsilons: ex.float_list("discrepancy.epsilons", &[0.0, 0.1, 0.5, 0.9, 1.0])?,
        powers: ex.float_list(
            "discrepancy.powers",
            &[2.0 / 3.0, 1.0 / 3.0],
        )?,
    };

    if let Some(key) = ex.map.keys().next() {
        return Err(ConfigError::UnknownKey(key.clone()));
    }

    Ok(RunConfig {
        curve,
        law,
        redistribution,
        stepping,
        stopping,
        output,
        image,
        eoc,
        discrepancy,
    })
}
