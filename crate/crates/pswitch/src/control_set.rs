//! Control sets and their pointwise geometry: leading matrices, feasibility,
//! degenerate members of the convex hull and the matrix-ball tests.

use std::f64::consts::PI;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::linalg::{
    kernel_image_unchecked, oriented_angle, singular_values, spectrum, Mat2, SpectrumKind, Vec2,
};

/// Cross-product threshold for "same line" tests on unit directions.
pub const EPS_COLLINEAR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ControlSetError {
    #[error("control set is empty")]
    Empty,
    #[error("non-finite matrix entry")]
    NonFinite,
    #[error("negative radius {0}")]
    NegativeRadius(f64),
    #[error("reducible control set: common eigenvector ({}, {})", .0.x1, .0.x2)]
    Reducible(Vec2),
    #[error("zero vector")]
    ZeroVector,
    #[error("point ({}, {}) is infeasible", .0.x1, .0.x2)]
    Infeasible(Vec2),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    /// +1 for counterclockwise motion, -1 for clockwise.
    pub fn sign(self) -> f64 {
        match self {
            Side::Left => 1.0,
            Side::Right => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Noise {
    FrobeniusBall(f64),
    Polytope(Vec<Mat2>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SetKind {
    Finite(Vec<Mat2>),
    FrobeniusBall { center: Mat2, radius: f64 },
    NoisySum { base: Vec<Mat2>, noise: Noise },
}

/// Which generator produced a leading direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GenTag {
    /// Index into the (expanded) generator list.
    Matrix(usize),
    /// Tangent to the disc of base matrix `i` (ball-type sets).
    Tangent(usize),
}

impl std::fmt::Display for GenTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GenTag::Matrix(i) => write!(f, "{i}"),
            GenTag::Tangent(i) => write!(f, "t{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LeadingDirection {
    Defined {
        matrix: Mat2,
        /// Unit direction of the leading image.
        ray: Vec2,
        /// Oriented angle from x to the image.
        angle_to_x: f64,
        generator: GenTag,
    },
    Undefined,
}

impl LeadingDirection {
    pub fn angle(&self) -> Option<f64> {
        match self {
            LeadingDirection::Defined { angle_to_x, .. } => Some(*angle_to_x),
            LeadingDirection::Undefined => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReversePencil {
    pub a1: Mat2,
    pub a2: Mat2,
    pub kernel1: Vec2,
    pub kernel2: Vec2,
    pub image: Vec2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Provenance {
    Vertex,
    PencilInterior(ReversePencil),
    SameKernelCombination,
    /// Isolated root of det((1−t)Aᵢ + tAⱼ) that fits neither structured case.
    SegmentInterior,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegenerateMember {
    pub matrix: Mat2,
    pub provenance: Provenance,
    /// Generator indices and convex parameter (t = 0 for vertices).
    pub i: usize,
    pub j: usize,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BallDegenerate {
    None,
    Unique(Mat2),
    NonUniqueDegenerate,
}

/// Witness of a matrix with a nonnegative eigenvalue in the hull.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonnegWitness {
    pub matrix: Mat2,
    pub eigenvector: Vec2,
    pub eigenvalue: f64,
}

/// Compact control set with its accumulated shift.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSet {
    kind: SetKind,
    gens: Vec<Mat2>,
    radius: f64,
    shift: f64,
    common_eigenvector: Option<Vec2>,
}

impl ControlSet {
    /// Finite set; rejects reducible input.
    pub fn finite(mats: Vec<Mat2>) -> Result<Self, ControlSetError> {
        let s = Self::finite_allow_reducible(mats)?;
        match s.common_eigenvector {
            Some(v) => Err(ControlSetError::Reducible(v)),
            None => Ok(s),
        }
    }

    /// Finite set that tolerates a shared eigenvector (e.g. axis-aligned polygon systems).
    pub fn finite_allow_reducible(mats: Vec<Mat2>) -> Result<Self, ControlSetError> {
        let gens = drop_scalar(&mats)?;
        let common = common_eigenvector(&gens, 0.0);
        if let Some(v) = common {
            warn!("control set is reducible, common eigenvector ({:.6}, {:.6})", v.x1, v.x2);
        }
        Ok(ControlSet {
            kind: SetKind::Finite(gens.clone()),
            gens,
            radius: 0.0,
            shift: 0.0,
            common_eigenvector: common,
        })
    }

    pub fn frobenius_ball(center: Mat2, radius: f64) -> Result<Self, ControlSetError> {
        if !center.is_finite() || !radius.is_finite() {
            return Err(ControlSetError::NonFinite);
        }
        if radius < 0.0 {
            return Err(ControlSetError::NegativeRadius(radius));
        }
        let common = common_eigenvector(&[center], radius);
        if let Some(v) = common {
            return Err(ControlSetError::Reducible(v));
        }
        Ok(ControlSet {
            kind: SetKind::FrobeniusBall { center, radius },
            gens: vec![center],
            radius,
            shift: 0.0,
            common_eigenvector: None,
        })
    }

    pub fn noisy(base: Vec<Mat2>, noise: Noise) -> Result<Self, ControlSetError> {
        if base.is_empty() {
            return Err(ControlSetError::Empty);
        }
        if base.iter().any(|m| !m.is_finite()) {
            return Err(ControlSetError::NonFinite);
        }
        match &noise {
            Noise::FrobeniusBall(r) => {
                if !r.is_finite() {
                    return Err(ControlSetError::NonFinite);
                }
                if *r < 0.0 {
                    return Err(ControlSetError::NegativeRadius(*r));
                }
                let common = common_eigenvector(&base, *r);
                if let Some(v) = common {
                    return Err(ControlSetError::Reducible(v));
                }
                Ok(ControlSet {
                    kind: SetKind::NoisySum { base: base.clone(), noise: noise.clone() },
                    gens: base,
                    radius: *r,
                    shift: 0.0,
                    common_eigenvector: None,
                })
            }
            Noise::Polytope(ds) => {
                let verts = minkowski_vertices(&base, ds);
                let gens = drop_scalar(&verts)?;
                let common = common_eigenvector(&gens, 0.0);
                if let Some(v) = common {
                    return Err(ControlSetError::Reducible(v));
                }
                Ok(ControlSet {
                    kind: SetKind::NoisySum { base, noise },
                    gens,
                    radius: 0.0,
                    shift: 0.0,
                    common_eigenvector: None,
                })
            }
        }
    }

    pub fn kind(&self) -> &SetKind {
        &self.kind
    }

    /// Matrices (finite case) or disc centers (ball-type sets).
    pub fn generators(&self) -> &[Mat2] {
        &self.gens
    }

    /// Frobenius radius attached to every generator (0 for finite sets).
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn is_finite_kind(&self) -> bool {
        self.radius == 0.0
    }

    pub fn common_eigenvector(&self) -> Option<Vec2> {
        self.common_eigenvector
    }

    pub fn is_irreducible(&self) -> bool {
        self.common_eigenvector.is_none()
    }

    /// The set 𝒜 − αI.
    pub fn shifted(&self, alpha: f64) -> ControlSet {
        let sh = |v: &[Mat2]| v.iter().map(|m| m.shift(alpha)).collect::<Vec<_>>();
        let kind = match &self.kind {
            SetKind::Finite(ms) => SetKind::Finite(sh(ms)),
            SetKind::FrobeniusBall { center, radius } => {
                SetKind::FrobeniusBall { center: center.shift(alpha), radius: *radius }
            }
            SetKind::NoisySum { base, noise } => SetKind::NoisySum { base: sh(base), noise: noise.clone() },
        };
        ControlSet {
            kind,
            gens: sh(&self.gens),
            radius: self.radius,
            shift: self.shift + alpha,
            common_eigenvector: self.common_eigenvector,
        }
    }

    /// Same set type and radius with replaced generators (used for snapping after a shift).
    pub fn with_generators(&self, gens: Vec<Mat2>) -> ControlSet {
        ControlSet { gens, ..self.clone() }
    }

    pub fn with_radius(&self, radius: f64) -> ControlSet {
        ControlSet { radius, ..self.clone() }
    }

    /// Upper bound on the Frobenius norm over the set.
    pub fn max_frobenius(&self) -> f64 {
        self.gens.iter().map(|m| m.frobenius()).fold(0.0, f64::max) + self.radius
    }

    /// Candidate images at `x`: one angular arc per generator.
    fn arcs(&self, x: Vec2) -> Vec<ImageArc> {
        let nx = x.norm();
        let rho = self.radius * nx;
        self.gens
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let p = a.apply(x);
                let len = p.norm();
                let scale = a.frobenius().max(1e-300) * nx;
                if self.radius == 0.0 {
                    if len <= 1e-15 * scale {
                        return ImageArc::Zero;
                    }
                    let th = oriented_angle(x, p).unwrap_or(0.0);
                    ImageArc::Arc { idx: i, theta: th, half: 0.0, len, center: p }
                } else {
                    if len <= rho {
                        // touching within rounding: the disc is tangent to the origin
                        if len > 0.0 && rho - len <= 1e-12 * rho {
                            let th = oriented_angle(x, p).unwrap_or(0.0);
                            return ImageArc::Arc { idx: i, theta: th, half: PI / 2.0, len: 0.0, center: p };
                        }
                        return ImageArc::Zero;
                    }
                    let th = oriented_angle(x, p).unwrap_or(0.0);
                    let half = (rho / len).asin();
                    let tl = (len * len - rho * rho).sqrt();
                    ImageArc::Arc { idx: i, theta: th, half, len: tl, center: p }
                }
            })
            .collect()
    }

    /// True iff no matrix of co(𝒜) maps x to λx with λ ≥ 0.
    pub fn is_feasible(&self, x: Vec2) -> Result<bool, ControlSetError> {
        if x.norm() == 0.0 || !x.is_finite() {
            return Err(ControlSetError::ZeroVector);
        }
        let arcs = self.arcs(x);
        let mut a_min = f64::INFINITY;
        let mut b_max = f64::NEG_INFINITY;
        for arc in &arcs {
            match *arc {
                ImageArc::Zero => return Ok(false),
                ImageArc::Arc { theta, half, .. } => {
                    if theta.abs() <= half {
                        return Ok(false);
                    }
                    if let Some(a) = pos_candidate(theta, half) {
                        a_min = a_min.min(a);
                    }
                    if let Some(b) = neg_candidate(theta, half) {
                        b_max = b_max.max(b);
                    }
                }
            }
        }
        Ok(!(a_min - b_max <= PI))
    }

    /// Leading left/right matrix at x, with the feasibility precondition checked.
    pub fn leading(&self, x: Vec2, side: Side) -> Result<LeadingDirection, ControlSetError> {
        if !self.is_feasible(x)? {
            return Err(ControlSetError::Infeasible(x));
        }
        Ok(self.leading_unchecked(x, side))
    }

    /// Leading direction without the feasibility check; zero images are skipped.
    pub fn leading_unchecked(&self, x: Vec2, side: Side) -> LeadingDirection {
        let mut best: Option<(f64, f64, usize, f64, Vec2)> = None;
        for arc in self.arcs(x) {
            let ImageArc::Arc { idx, theta, half, len, center } = arc else {
                continue;
            };
            let cand = match side {
                Side::Left => pos_candidate(theta, half).filter(|a| *a < PI),
                Side::Right => neg_candidate(theta, half),
            };
            let Some(ang) = cand else { continue };
            let better = match best {
                None => true,
                Some((b, blen, _, _, _)) => {
                    let d = match side {
                        Side::Left => b - ang,
                        Side::Right => ang - b,
                    };
                    d > 1e-14 || (d.abs() <= 1e-14 && len > blen)
                }
            };
            if better {
                best = Some((ang, len, idx, half, center));
            }
        }
        let Some((ang, len, idx, _half, center)) = best else {
            return LeadingDirection::Undefined;
        };
        let xhat = x * (1.0 / x.norm());
        let ray = xhat.rotate(ang);
        if self.radius == 0.0 {
            LeadingDirection::Defined {
                matrix: self.gens[idx],
                ray,
                angle_to_x: ang,
                generator: GenTag::Matrix(idx),
            }
        } else {
            let y = ray * len;
            let z = y - center;
            let nx2 = x.dot(x);
            let m = self.gens[idx] + z.outer(x) * (1.0 / nx2);
            LeadingDirection::Defined { matrix: m, ray, angle_to_x: ang, generator: GenTag::Tangent(idx) }
        }
    }

    /// Polar growth rate cot φ of the leading trajectory through direction `gamma`.
    pub fn leading_rate(&self, gamma: f64, side: Side) -> Option<(f64, GenTag)> {
        match self.leading_unchecked(Vec2::polar(gamma), side) {
            LeadingDirection::Defined { angle_to_x, generator, .. } => {
                Some((angle_to_x.cos() / angle_to_x.sin(), generator))
            }
            LeadingDirection::Undefined => None,
        }
    }

    /// Degenerate matrices of co(𝒜) for finite sets.
    pub fn degenerate_in_hull(&self) -> Vec<DegenerateMember> {
        degenerate_in_hull(&self.gens)
    }

    pub fn reverse_pencils(&self) -> Vec<ReversePencil> {
        reverse_pencils(&self.gens, EPS_COLLINEAR)
    }

    /// A matrix of co(𝒜) with a nonnegative eigenvalue, if one exists.
    pub fn nonneg_eigenvalue_witness(&self) -> Option<NonnegWitness> {
        hull_nonneg_eigenvalue(&self.gens, self.radius)
    }
}

#[derive(Debug, Clone, Copy)]
enum ImageArc {
    Zero,
    Arc { idx: usize, theta: f64, half: f64, len: f64, center: Vec2 },
}

fn pos_candidate(theta: f64, half: f64) -> Option<f64> {
    let lo = theta - half;
    if lo > 0.0 {
        Some(lo)
    } else if lo <= -PI {
        Some(lo + 2.0 * PI)
    } else {
        None
    }
}

fn neg_candidate(theta: f64, half: f64) -> Option<f64> {
    let hi = theta + half;
    if hi < 0.0 {
        Some(hi)
    } else if hi > PI {
        Some(hi - 2.0 * PI)
    } else {
        None
    }
}

fn drop_scalar(mats: &[Mat2]) -> Result<Vec<Mat2>, ControlSetError> {
    if mats.is_empty() {
        return Err(ControlSetError::Empty);
    }
    if mats.iter().any(|m| !m.is_finite()) {
        return Err(ControlSetError::NonFinite);
    }
    let kept: Vec<Mat2> = mats
        .iter()
        .copied()
        .filter(|m| {
            let s = m.is_scalar();
            if s {
                warn!("dropping identity-proportional generator {m}");
            }
            !s
        })
        .collect();
    if kept.is_empty() {
        return Err(ControlSetError::Empty);
    }
    Ok(kept)
}

/// Real eigen-directions of a matrix (one or two lines).
fn eigen_lines(m: &Mat2) -> Vec<Vec2> {
    match spectrum(m).kind {
        SpectrumKind::ComplexPair { .. } => vec![],
        SpectrumKind::RealPair { l1, l2 } => {
            let v2 = crate::linalg::eigenvector(m, l2);
            let v1 = crate::linalg::eigenvector(m, l1);
            if v1.cross(v2).abs() <= 1e-12 {
                vec![v2]
            } else {
                vec![v2, v1]
            }
        }
    }
}

/// A direction that is an eigenvector of every generator, if any.
fn common_eigenvector(gens: &[Mat2], radius: f64) -> Option<Vec2> {
    if radius > 0.0 || gens.is_empty() {
        return None;
    }
    for v in eigen_lines(&gens[0]) {
        let shared = gens.iter().all(|m| {
            let w = m.apply(v);
            w.cross(v).abs() <= 1e-12 * m.frobenius().max(1e-300)
        });
        if shared {
            return Some(v);
        }
    }
    None
}

/// Vertices of {Aᵢ + Dⱼ}, duplicates within 1e-12 (Frobenius) removed.
pub fn minkowski_vertices(base: &[Mat2], noise: &[Mat2]) -> Vec<Mat2> {
    let mut out: Vec<Mat2> = Vec::new();
    let noise: Vec<Mat2> = if noise.is_empty() { vec![Mat2::zero()] } else { noise.to_vec() };
    for a in base {
        for d in &noise {
            let m = *a + *d;
            if !out.iter().any(|o| (*o - m).frobenius() <= 1e-12) {
                out.push(m);
            }
        }
    }
    out
}

/// Coefficients (c0, c1, c2) of t ↦ det(A + tB).
pub fn det_pencil(a: &Mat2, b: &Mat2) -> (f64, f64, f64) {
    let c1 = a.a11 * b.a22 + a.a22 * b.a11 - a.a12 * b.a21 - a.a21 * b.a12;
    (a.det(), c1, b.det())
}

/// Real roots of c0 + c1 t + c2 t², numerically stable form.
pub fn quadratic_roots(c0: f64, c1: f64, c2: f64) -> Vec<f64> {
    let scale = c0.abs().max(c1.abs()).max(c2.abs());
    if scale == 0.0 {
        return vec![];
    }
    let (c0, c1, c2) = (c0 / scale, c1 / scale, c2 / scale);
    if c2.abs() <= 1e-14 {
        if c1.abs() <= 1e-14 {
            return vec![];
        }
        return vec![-c0 / c1];
    }
    let disc = c1 * c1 - 4.0 * c2 * c0;
    if disc < -1e-14 {
        return vec![];
    }
    let sq = disc.max(0.0).sqrt();
    if sq == 0.0 {
        return vec![-c1 / (2.0 * c2)];
    }
    let sgn = if c1 >= 0.0 { 1.0 } else { -1.0 };
    let q = -0.5 * (c1 + sgn * sq);
    let mut r = vec![q / c2, c0 / q];
    r.sort_by(|a, b| a.partial_cmp(b).unwrap());
    r
}

fn same_line(a: Vec2, b: Vec2, eps: f64) -> bool {
    a.cross(b).abs() <= eps
}

pub fn reverse_pencils(gens: &[Mat2], eps: f64) -> Vec<ReversePencil> {
    let mut out = Vec::new();
    for i in 0..gens.len() {
        for j in (i + 1)..gens.len() {
            if let Some(p) = pencil_of(&gens[i], &gens[j], eps) {
                out.push(p);
            }
        }
    }
    out
}

pub fn pencil_of(a1: &Mat2, a2: &Mat2, eps: f64) -> Option<ReversePencil> {
    if !a1.is_degenerate() || !a2.is_degenerate() {
        return None;
    }
    if a1.trace() >= 0.0 || a2.trace() >= 0.0 {
        return None;
    }
    let (k1, i1) = kernel_image_unchecked(a1);
    let (k2, i2) = kernel_image_unchecked(a2);
    if same_line(i1, i2, eps) && !same_line(k1, k2, eps) {
        Some(ReversePencil { a1: *a1, a2: *a2, kernel1: k1, kernel2: k2, image: i1 })
    } else {
        None
    }
}

pub fn degenerate_in_hull(gens: &[Mat2]) -> Vec<DegenerateMember> {
    let mut out = Vec::new();
    for (i, a) in gens.iter().enumerate() {
        if a.is_degenerate() {
            out.push(DegenerateMember { matrix: *a, provenance: Provenance::Vertex, i, j: i, t: 0.0 });
        }
    }
    for i in 0..gens.len() {
        for j in (i + 1)..gens.len() {
            let (a, b) = (gens[i], gens[j]);
            let d = b - a;
            let (c0, c1, c2) = det_pencil(&a, &d);
            let scale = a.frobenius().max(b.frobenius()).powi(2).max(1e-300);
            let identically_zero = c0.abs().max(c1.abs()).max(c2.abs()) <= 1e-10 * scale;
            let structured = if a.is_degenerate() && b.is_degenerate() {
                let (ka, _) = kernel_image_unchecked(&a);
                let (kb, _) = kernel_image_unchecked(&b);
                if let Some(p) = pencil_of(&a, &b, EPS_COLLINEAR) {
                    Some(Provenance::PencilInterior(p))
                } else if same_line(ka, kb, EPS_COLLINEAR) {
                    Some(Provenance::SameKernelCombination)
                } else {
                    None
                }
            } else {
                None
            };
            let ts: Vec<f64> = if identically_zero {
                vec![0.5]
            } else {
                quadratic_roots(c0, c1, c2).into_iter().filter(|t| *t > 1e-12 && *t < 1.0 - 1e-12).collect()
            };
            for t in ts {
                let m = a * (1.0 - t) + b * t;
                let prov = structured.unwrap_or(Provenance::SegmentInterior);
                out.push(DegenerateMember { matrix: m, provenance: prov, i, j, t });
            }
        }
    }
    out
}

/// Distance from the point p to the ray {λu : λ ≥ 0}, u a unit vector.
fn dist_point_ray(p: Vec2, u: Vec2) -> (f64, f64) {
    let d = p.dot(u);
    if d >= 0.0 {
        (u.cross(p).abs(), d)
    } else {
        (p.norm(), 0.0)
    }
}

/// Closest approach between conv(points) and the ray along u:
/// returns (distance, index pair, convex parameter, ray parameter λ).
fn hull_ray_distance(pts: &[Vec2], u: Vec2) -> (f64, usize, usize, f64, f64) {
    let mut best = (f64::INFINITY, 0, 0, 0.0, 0.0);
    for (i, p) in pts.iter().enumerate() {
        let (d, l) = dist_point_ray(*p, u);
        if d < best.0 {
            best = (d, i, i, 0.0, l);
        }
    }
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            let (p, q) = (pts[i], pts[j]);
            let (cp, cq) = (u.cross(p), u.cross(q));
            if cp * cq <= 0.0 && cp != cq {
                let t = cp / (cp - cq);
                let w = p * (1.0 - t) + q * t;
                if w.dot(u) >= 0.0 {
                    return (0.0, i, j, t, w.dot(u));
                }
            }
            // origin to segment
            let e = q - p;
            let ee = e.dot(e);
            if ee > 0.0 {
                let t = (-(p.dot(e)) / ee).clamp(0.0, 1.0);
                let w = p + e * t;
                let n = w.norm();
                if n < best.0 {
                    best = (n, i, j, t, 0.0);
                }
            }
        }
    }
    best
}

/// Dense scan over directions for a member of co(𝒜) ⊕ ball(r) with a nonnegative eigenvalue.
pub fn hull_nonneg_eigenvalue(gens: &[Mat2], radius: f64) -> Option<NonnegWitness> {
    const N: usize = 4096;
    let scale = gens.iter().map(|m| m.frobenius()).fold(0.0, f64::max) + radius;
    let tol = 1e-13 * scale.max(1e-300);
    let eval = |s: f64| -> f64 {
        let u = Vec2::polar(s);
        let pts: Vec<Vec2> = gens.iter().map(|m| m.apply(u)).collect();
        hull_ray_distance(&pts, u).0 - radius
    };
    let h = PI / N as f64;
    let vals: Vec<f64> = (0..N).map(|k| eval(k as f64 * h)).collect();
    let mut cands: Vec<usize> = (0..N)
        .filter(|&k| {
            let prev = vals[(k + N - 1) % N];
            let next = vals[(k + 1) % N];
            vals[k] <= prev && vals[k] <= next
        })
        .collect();
    cands.sort_by(|a, b| vals[*a].partial_cmp(&vals[*b]).unwrap());
    cands.truncate(8);
    let mut best_s = 0.0;
    let mut best_v = f64::INFINITY;
    for k in cands {
        let (s, v) = golden_min(&eval, (k as f64 - 1.0) * h, (k as f64 + 1.0) * h, 1e-13);
        let (s, v) = if vals[k] < v { (k as f64 * h, vals[k]) } else { (s, v) };
        if v < best_v {
            best_v = v;
            best_s = s;
        }
        if best_v <= tol {
            break;
        }
    }
    if best_v > tol {
        return None;
    }
    let u = Vec2::polar(best_s);
    let pts: Vec<Vec2> = gens.iter().map(|m| m.apply(u)).collect();
    let (_, i, j, t, lam) = hull_ray_distance(&pts, u);
    let mh = gens[i] * (1.0 - t) + gens[j] * t;
    let y = mh.apply(u) - u * lam;
    Some(NonnegWitness { matrix: mh - y.outer(u), eigenvector: u, eigenvalue: lam })
}

/// Golden-section minimization on [a, b].
pub fn golden_min(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

pub fn ball_has_nonneg_eigenvalue(center: &Mat2, r: f64) -> bool {
    hull_nonneg_eigenvalue(&[*center], r).is_some()
}

/// Degenerate matrices of the Frobenius ball around `center`.
pub fn ball_degenerate(center: &Mat2, r: f64) -> BallDegenerate {
    let (s1, _) = singular_values(center);
    let tol = 1e-9 * s1.max(1.0);
    if r < s1 - tol {
        return BallDegenerate::None;
    }
    if r > s1 + tol {
        return BallDegenerate::NonUniqueDegenerate;
    }
    let g = center.transpose() * *center;
    let k = crate::linalg::eigenvector(&g, s1 * s1);
    let w = center.apply(k);
    let w = if s1 > 0.0 { w * (1.0 / s1) } else { crate::linalg::eigenvector(&(*center * center.transpose()), 0.0) };
    BallDegenerate::Unique(*center - w.outer(k) * r)
}
