//! Spec files, run reports, sphere CSV/SVG, polygon CSV and s-vector parsing.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::applications::NoiseModel;
use crate::barabanov::SphereModel;
use crate::control_set::{ControlSet, ControlSetError, SetKind, Noise};
use crate::linalg::{Mat2, Vec2};

pub const CSV_ROWS: usize = 4096;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IoError {
    #[error("{what}: line {line}, column {column}: {msg}")]
    Parse { what: &'static str, line: usize, column: usize, msg: String },
    #[error("invalid spec: {0}")]
    Spec(String),
    #[error(transparent)]
    ControlSet(#[from] ControlSetError),
    #[error("emitted polyline failed validation: {0}")]
    Validation(String),
}

fn parse_err(what: &'static str, line: usize, column: usize, msg: impl Into<String>) -> IoError {
    IoError::Parse { what, line, column, msg: msg.into() }
}

pub type RowMajor = [[f64; 2]; 2];

pub fn to_mat(m: &RowMajor) -> Mat2 {
    Mat2::new(m[0][0], m[0][1], m[1][0], m[1][1])
}

pub fn from_mat(m: &Mat2) -> RowMajor {
    [[m.a11, m.a12], [m.a21, m.a22]]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    Polytope { matrices: Vec<RowMajor> },
    Elementwise { eps: RowMajor },
    FrobeniusBall { radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecKind {
    Finite,
    FrobeniusBall,
    Noisy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub kind: SpecKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrices: Option<Vec<RowMajor>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<RowMajor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSpec>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub allow_reducible: bool,
}

impl SystemSpec {
    pub fn finite(mats: &[Mat2]) -> Self {
        SystemSpec {
            kind: SpecKind::Finite,
            matrices: Some(mats.iter().map(from_mat).collect()),
            center: None,
            radius: None,
            noise: None,
            allow_reducible: false,
        }
    }

    pub fn from_set(set: &ControlSet) -> Self {
        match set.kind() {
            SetKind::Finite(m) => SystemSpec::finite(m),
            SetKind::FrobeniusBall { center, radius } => SystemSpec {
                kind: SpecKind::FrobeniusBall,
                center: Some(from_mat(center)),
                radius: Some(*radius),
                ..SystemSpec::finite(&[])
            },
            SetKind::NoisySum { base, noise: Noise::FrobeniusBall(r) } => SystemSpec {
                kind: SpecKind::Noisy,
                noise: Some(NoiseSpec::FrobeniusBall { radius: *r }),
                ..SystemSpec::finite(base)
            },
            SetKind::NoisySum { .. } => SystemSpec::finite(set.generators()),
        }
    }

    fn mats(&self) -> Result<Vec<Mat2>, IoError> {
        let m = self.matrices.as_ref().ok_or_else(|| IoError::Spec("missing \"matrices\"".into()))?;
        Ok(m.iter().map(to_mat).collect())
    }

    pub fn noise_model(&self) -> Result<NoiseModel, IoError> {
        Ok(match self.noise.as_ref().ok_or_else(|| IoError::Spec("missing \"noise\"".into()))? {
            NoiseSpec::Polytope { matrices } => NoiseModel::Polytope(matrices.iter().map(to_mat).collect()),
            NoiseSpec::Elementwise { eps } => NoiseModel::Elementwise(to_mat(eps)),
            NoiseSpec::FrobeniusBall { radius } => NoiseModel::FrobeniusBall(*radius),
        })
    }

    /// Base matrices of a noisy spec.
    pub fn base(&self) -> Result<Vec<Mat2>, IoError> {
        self.mats()
    }

    pub fn center_matrix(&self) -> Result<Mat2, IoError> {
        match (&self.center, &self.matrices) {
            (Some(c), _) => Ok(to_mat(c)),
            (None, Some(m)) if m.len() == 1 => Ok(to_mat(&m[0])),
            _ => Err(IoError::Spec("expected \"center\" or a single matrix".into())),
        }
    }

    pub fn to_control_set(&self) -> Result<ControlSet, IoError> {
        match self.kind {
            SpecKind::Finite => {
                let m = self.mats()?;
                Ok(if self.allow_reducible { ControlSet::finite_allow_reducible(m)? } else { ControlSet::finite(m)? })
            }
            SpecKind::FrobeniusBall => {
                let r = self.radius.ok_or_else(|| IoError::Spec("missing \"radius\"".into()))?;
                Ok(ControlSet::frobenius_ball(self.center_matrix()?, r)?)
            }
            SpecKind::Noisy => {
                let noise = match self.noise_model()? {
                    NoiseModel::Polytope(d) => Noise::Polytope(d),
                    NoiseModel::Elementwise(e) => Noise::Polytope(crate::applications::elementwise_vertices(&e)),
                    NoiseModel::FrobeniusBall(r) => Noise::FrobeniusBall(r),
                };
                Ok(ControlSet::noisy(self.mats()?, noise)?)
            }
        }
    }
}

pub fn parse_spec(text: &str) -> Result<SystemSpec, IoError> {
    serde_json::from_str(text).map_err(|e| parse_err("spec", e.line(), e.column(), e.to_string()))
}

pub fn spec_to_json(spec: &SystemSpec) -> String {
    let mut s = serde_json::to_string_pretty(spec).expect("spec serializes");
    s.push('\n');
    s
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: u32,
    pub command: String,
    pub verdict: Option<String>,
    pub sigma: Option<f64>,
    pub sigma_error: Option<f64>,
    pub dominance: Option<String>,
    pub uniqueness: Option<String>,
    pub partition: Option<String>,
    pub artifacts: Vec<String>,
    pub details: serde_json::Value,
    pub wall_time_ms: f64,
}

impl RunReport {
    pub fn new(command: &str) -> Self {
        RunReport {
            schema: 1,
            command: command.to_string(),
            verdict: None,
            sigma: None,
            sigma_error: None,
            dominance: None,
            uniqueness: None,
            partition: None,
            artifacts: Vec::new(),
            details: serde_json::Value::Null,
            wall_time_ms: 0.0,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// theta,x1,x2 rows at θ = 2πk/4096.
pub fn sphere_csv(sphere: &SphereModel) -> Result<String, IoError> {
    let pts = sphere.polyline(CSV_ROWS);
    validate_polyline(&pts.iter().map(|p| p.1).collect::<Vec<_>>())?;
    let mut out = String::with_capacity(CSV_ROWS * 64);
    out.push_str("theta,x1,x2\n");
    for (t, p) in &pts {
        let _ = writeln!(out, "{},{},{}", t, p.x1, p.x2);
    }
    Ok(out)
}

/// Closed, convex and centrally symmetric (even count, v[k + n/2] = −v[k]).
pub fn validate_polyline(pts: &[Vec2]) -> Result<(), IoError> {
    let n = pts.len();
    if n < 4 || n % 2 != 0 {
        return Err(IoError::Validation(format!("need an even number of points, got {n}")));
    }
    let scale = pts.iter().map(|p| p.norm()).fold(0.0, f64::max);
    if !(scale.is_finite() && scale > 0.0) {
        return Err(IoError::Validation("non-finite or empty curve".into()));
    }
    for k in 0..n / 2 {
        if (pts[k] + pts[k + n / 2]).norm() > 1e-9 * scale {
            return Err(IoError::Validation(format!("point {k} is not symmetric")));
        }
    }
    for k in 0..n {
        let (a, b, c) = (pts[k], pts[(k + 1) % n], pts[(k + 2) % n]);
        if (b - a).cross(c - b) < -1e-9 * scale * scale {
            return Err(IoError::Validation(format!("not convex at point {}", (k + 1) % n)));
        }
        if a.cross(b) <= 0.0 {
            return Err(IoError::Validation(format!("not counterclockwise at point {k}")));
        }
    }
    Ok(())
}

/// Parses theta,x1,x2 rows (header required).
pub fn parse_sphere_csv(text: &str) -> Result<Vec<(f64, Vec2)>, IoError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "theta,x1,x2" => {}
        _ => return Err(parse_err("sphere csv", 1, 1, "expected header theta,x1,x2")),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let v = parse_row(line, 3, i + 1, "sphere csv")?;
        out.push((v[0], Vec2::new(v[1], v[2])));
    }
    Ok(out)
}

fn parse_row(line: &str, n: usize, lineno: usize, what: &'static str) -> Result<Vec<f64>, IoError> {
    let mut out = Vec::with_capacity(n);
    let mut col = 1;
    for field in line.split(',') {
        let t = field.trim();
        let x: f64 = t.parse().map_err(|_| parse_err(what, lineno, col, format!("not a number: {t:?}")))?;
        if !x.is_finite() {
            return Err(parse_err(what, lineno, col, "non-finite value"));
        }
        out.push(x);
        col += field.chars().count() + 1;
    }
    if out.len() != n {
        return Err(parse_err(what, lineno, 1, format!("expected {n} fields, got {}", out.len())));
    }
    Ok(out)
}

/// Polygon vertices, one "x1,x2" per line; blank lines, '#' comments and an "x1,x2" header are skipped.
pub fn parse_polygon_csv(text: &str) -> Result<Vec<Vec2>, IoError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') || (i == 0 && t.replace(' ', "") == "x1,x2") {
            continue;
        }
        let v = parse_row(line, 2, i + 1, "polygon csv")?;
        out.push(Vec2::new(v[0], v[1]));
    }
    Ok(out)
}

/// Comma-separated numbers, optionally wrapped in brackets.
pub fn parse_s_vector(text: &str) -> Result<Vec<f64>, IoError> {
    let t = text.trim();
    let inner = t.strip_prefix('[').map(|r| r.strip_suffix(']')).unwrap_or(Some(t));
    let inner = inner.ok_or_else(|| parse_err("s-vector", 1, t.len(), "unbalanced bracket"))?;
    if inner.trim().is_empty() {
        return Ok(Vec::new());
    }
    let offset = t.len() - t.trim_start_matches('[').len();
    let mut out = Vec::new();
    let mut col = offset + 1;
    for field in inner.split(',') {
        let f = field.trim();
        let x: f64 = f.parse().map_err(|_| parse_err("s-vector", 1, col, format!("not a number: {f:?}")))?;
        if !x.is_finite() {
            return Err(parse_err("s-vector", 1, col, "non-finite value"));
        }
        out.push(x);
        col += field.chars().count() + 1;
    }
    Ok(out)
}

/// Closed path in a square viewBox centered at the origin with a 10% margin.
pub fn sphere_svg(sphere: &SphereModel) -> String {
    let pts = sphere.polyline(CSV_ROWS);
    let ext = pts.iter().map(|p| p.1.x1.abs().max(p.1.x2.abs())).fold(0.0, f64::max) * 1.1;
    let mut path = String::new();
    for (k, (_, p)) in pts.iter().enumerate() {
        let _ = write!(path, "{}{:.6} {:.6} ", if k == 0 { "M" } else { "L" }, p.x1, -p.x2);
    }
    path.push('Z');
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{:.6} {:.6} {:.6} {:.6}\" width=\"512\" height=\"512\">\n\
         <path d=\"{path}\" fill=\"none\" stroke=\"black\" stroke-width=\"{:.6}\"/>\n</svg>\n",
        -ext,
        -ext,
        2.0 * ext,
        2.0 * ext,
        ext / 200.0
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn s_vector_forms() {
        assert_eq!(parse_s_vector("1, -2.5").unwrap(), vec![1.0, -2.5]);
        assert_eq!(parse_s_vector("[0.5]").unwrap(), vec![0.5]);
        assert_eq!(parse_s_vector("[]").unwrap(), Vec::<f64>::new());
        assert!(matches!(parse_s_vector("1,x"), Err(IoError::Parse { column: 3, .. })));
    }

    #[test]
    fn malformed_json_has_position() {
        match parse_spec("{\"kind\": \"finite\",\n \"matrices\": [[[1, 2], [3 4]]]}") {
            Err(IoError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn polygon_csv_errors() {
        let p = parse_polygon_csv("x1,x2\n1,0\n0,1\n").unwrap();
        assert_eq!(p.len(), 2);
        assert!(matches!(parse_polygon_csv("1,0\n0;1\n"), Err(IoError::Parse { line: 2, .. })));
    }
}
