//! CSV persistence: snapshot records, point sets and defect rows.
//!
//! Numbers are printed with 17 significant digits so that re-parsing
//! reproduces the exact f64 bits.

use std::fmt;

use curveflow::geometry::{derive_geometry, PolygonalCurve, Vec2};
use curveflow::stepper::{Snapshot, Trajectory};

#[derive(Debug)]
pub enum CsvError {
    MissingColumn(&'static str),
    BadField { line: usize, field: String },
    NoRows,
    NotACurve(String),
}

impl fmt::Display for CsvError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CsvError::MissingColumn(c) => write!(f, "points csv is missing column '{c}'"),
            CsvError::BadField { line, field } => {
                write!(f, "points csv line {line}: cannot parse '{field}'")
            }
            CsvError::NoRows => write!(f, "points csv holds no rows"),
            CsvError::NotACurve(msg) => write!(f, "points do not form a valid curve: {msg}"),
        }
    }
}

impl std::error::Error for CsvError {}

fn full(v: f64) -> String {
    format!("{v:.16e}")
}

pub const SNAPSHOT_HEADER: &str = "t,i,x,y,k,nu,alpha,r";

fn push_snapshot_rows(out: &mut String, snap: &Snapshot) {
    // Edge quantities (k, nu, r) recomputed from the stored curve; they are
    // deterministic functions of the vertex set.
    let geom = derive_geometry(&snap.curve).expect("snapshot curves are valid");
    for (i, v) in snap.curve.vertices().iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            full(snap.time),
            i + 1,
            full(v.x),
            full(v.y),
            full(snap.edge_curvatures[i]),
            full(geom.edge_angle(i)),
            full(snap.tangential_velocities[i]),
            full(geom.edge_lengths[i]),
        ));
    }
}

/// All snapshots plus the final state (skipped when it repeats the last
/// snapshot time), ordered by (t, i).
pub fn write_snapshots(traj: &Trajectory) -> String {
    let mut out = String::from(SNAPSHOT_HEADER);
    out.push('\n');
    for snap in &traj.snapshots {
        push_snapshot_rows(&mut out, snap);
    }
    let last_time = traj.snapshots.last().map(|s| s.time);
    if last_time != Some(traj.final_state.time) {
        push_snapshot_rows(&mut out, &traj.final_state);
    }
    out
}

pub fn write_points(points: &[Vec2]) -> String {
    let mut out = String::from("i,x,y\n");
    for (i, p) in points.iter().enumerate() {
        out.push_str(&format!("{},{},{}\n", i + 1, full(p.x), full(p.y)));
    }
    out
}

pub fn write_defects(rows: &[(String, usize, f64, f64)]) -> String {
    let mut out = String::from("label,N,Delta_L,Delta_A\n");
    for (label, n, dl, da) in rows {
        out.push_str(&format!("{label},{n},{},{}\n", full(*dl), full(*da)));
    }
    out
}

/// Read a vertex list from CSV text with `x` and `y` columns.
///
/// A snapshot file round-trips: when a `t` column is present only the rows of
/// the latest time are taken, ordered as written.
pub fn read_points_csv(text: &str) -> Result<Vec<Vec2>, CsvError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(CsvError::NoRows)?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    let find = |name: &'static str| -> Result<usize, CsvError> {
        columns
            .iter()
            .position(|c| *c == name)
            .ok_or(CsvError::MissingColumn(name))
    };
    let xi = find("x")?;
    let yi = find("y")?;
    let ti = columns.iter().position(|c| *c == "t");

    let mut rows: Vec<(f64, Vec2)> = Vec::new();
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let parse = |idx: usize| -> Result<f64, CsvError> {
            fields
                .get(idx)
                .and_then(|f| f.trim().parse().ok())
                .ok_or_else(|| CsvError::BadField {
                    line: lineno + 1,
                    field: fields.get(idx).unwrap_or(&"<missing>").to_string(),
                })
        };
        let t = match ti {
            Some(idx) => parse(idx)?,
            None => 0.0,
        };
        rows.push((t, Vec2::new(parse(xi)?, parse(yi)?)));
    }
    if rows.is_empty() {
        return Err(CsvError::NoRows);
    }
    let t_last = rows.iter().map(|(t, _)| *t).fold(f64::NEG_INFINITY, f64::max);
    Ok(rows
        .into_iter()
        .filter(|(t, _)| *t == t_last)
        .map(|(_, p)| p)
        .collect())
}

pub fn curve_from_points(points: Vec<Vec2>) -> Result<PolygonalCurve, CsvError> {
    PolygonalCurve::new(points).map_err(|e| CsvError::NotACurve(e.to_string()))
}
