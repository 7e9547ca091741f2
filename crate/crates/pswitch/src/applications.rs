//! Critical Frobenius radius, noise reduction to finite sets, polygon-to-system construction.

use log::{debug, info};
use serde::{Deserialize, Serialize};

use crate::barabanov::{build_norm, BuildError, BuildOptions, SphereModel};
use crate::control_set::{ControlSet, ControlSetError, Noise};
use crate::linalg::{singular_values, spectrum, Mat2, Vec2};
use crate::stability::{decide_stability, StabilityError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AppError {
    #[error("center is not Hurwitz (spectral abscissa {0})")]
    NotHurwitz(f64),
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("no unstable radius found up to {0}")]
    BracketFailure(f64),
    #[error("facet {0} is parallel to its position vector")]
    DegenerateFacet(usize),
    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),
    #[error(transparent)]
    ControlSet(#[from] ControlSetError),
    #[error(transparent)]
    Stability(#[from] StabilityError),
    #[error(transparent)]
    Build(#[from] BuildError),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriticalRadiusResult {
    pub radius: f64,
    pub iterations: usize,
    pub sigma_at_radius: f64,
    pub sphere: SphereModel,
}

fn ball_stable(center: Mat2, r: f64) -> Result<bool, AppError> {
    let set = ControlSet::frobenius_ball(center, r)?;
    Ok(decide_stability(&set)?.stable)
}

/// Smallest r for which the Frobenius ball around `center` is unstable, by bisection.
pub fn critical_radius(center: Mat2, tol: f64) -> Result<CriticalRadiusResult, AppError> {
    if !(tol > 0.0) {
        return Err(AppError::InvalidTolerance(tol));
    }
    let alpha = spectrum(&center).abscissa;
    if alpha >= 0.0 {
        return Err(AppError::NotHurwitz(alpha));
    }
    let s1 = singular_values(&center).0;
    let mut lo = 0.0;
    // the ball of radius σ1 already holds a singular matrix
    let mut hi = s1;
    let mut grown = 0;
    while ball_stable(center, hi)? {
        lo = hi;
        hi = 2.0 * hi + center.frobenius();
        grown += 1;
        if grown > 10 {
            return Err(AppError::BracketFailure(hi));
        }
    }
    let mut iterations = 0;
    while 0.5 * (hi - lo) > tol {
        let mid = 0.5 * (lo + hi);
        if ball_stable(center, mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
        debug!("radius bracket [{lo}, {hi}]");
    }
    let radius = (0.5 * (lo + hi)).min(s1);
    info!("critical radius {radius} after {iterations} iterations");
    let norm = build_norm(&ControlSet::frobenius_ball(center, radius)?, &BuildOptions::default())?;
    Ok(CriticalRadiusResult { radius, iterations, sigma_at_radius: norm.sigma.sigma, sphere: norm.sphere })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NoiseModel {
    /// Noise matrices Dⱼ; the set is {Aᵢ + Dⱼ}.
    Polytope(Vec<Mat2>),
    /// |Δᵢⱼ| ≤ εᵢⱼ entrywise.
    Elementwise(Mat2),
    FrobeniusBall(f64),
}

/// The 16 sign patterns of an entrywise bound.
pub fn elementwise_vertices(eps: &Mat2) -> Vec<Mat2> {
    (0..16u32)
        .map(|bits| {
            let s = |k: u32| if bits >> k & 1 == 1 { -1.0 } else { 1.0 };
            Mat2::new(s(0) * eps.a11, s(1) * eps.a12, s(2) * eps.a21, s(3) * eps.a22)
        })
        .collect()
}

pub fn reduce_noisy(base: Vec<Mat2>, noise: NoiseModel) -> Result<ControlSet, AppError> {
    let noise = match noise {
        NoiseModel::Polytope(d) => Noise::Polytope(d),
        NoiseModel::Elementwise(eps) => Noise::Polytope(elementwise_vertices(&eps)),
        NoiseModel::FrobeniusBall(r) if base.len() == 1 => return Ok(ControlSet::frobenius_ball(base[0], r)?),
        NoiseModel::FrobeniusBall(r) => Noise::FrobeniusBall(r),
    };
    Ok(ControlSet::noisy(base, noise)?)
}

/// Convex, counterclockwise, centrally symmetric polygon with 2n vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricPolygon {
    vertices: Vec<Vec2>,
}

impl SymmetricPolygon {
    pub fn new(vertices: Vec<Vec2>) -> Result<Self, AppError> {
        let m = vertices.len();
        if m < 4 || m % 2 != 0 {
            return Err(AppError::InvalidPolygon(format!("need an even number of at least 4 vertices, got {m}")));
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(AppError::InvalidPolygon("non-finite vertex".into()));
        }
        let scale = vertices.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let n = m / 2;
        for (i, v) in vertices.iter().enumerate() {
            if v.norm() <= 1e-12 * scale.max(1e-300) {
                return Err(AppError::InvalidPolygon(format!("vertex {i} is the origin")));
            }
            if (*v + vertices[(i + n) % m]).norm() > 1e-9 * scale {
                return Err(AppError::InvalidPolygon(format!("vertex {} is not the reflection of vertex {i}", (i + n) % m)));
            }
        }
        for i in 0..m {
            let (a, b, c) = (vertices[i], vertices[(i + 1) % m], vertices[(i + 2) % m]);
            if (b - a).cross(c - b) <= 1e-12 * scale * scale {
                return Err(AppError::InvalidPolygon(format!("not strictly convex and counterclockwise at vertex {}", (i + 1) % m)));
            }
        }
        Ok(SymmetricPolygon { vertices })
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn sphere(&self) -> SphereModel {
        SphereModel::from_polygon(&self.vertices)
    }
}

/// One degenerate matrix per facet pair: A x = 0 at the facet midpoint, A y = −y along the facet.
pub fn polygon_to_system(poly: &SymmetricPolygon) -> Result<ControlSet, AppError> {
    let v = poly.vertices();
    let n = v.len() / 2;
    let mut mats = Vec::with_capacity(n);
    for k in 0..n {
        let (p, q) = (v[k], v[k + 1]);
        let x = (p + q) * 0.5;
        let y = q - p;
        if x.cross(y).abs() < 1e-12 * x.norm() * y.norm() {
            return Err(AppError::DegenerateFacet(k));
        }
        let basis = Mat2::from_cols(x, y);
        let inv = basis.inverse().ok_or(AppError::DegenerateFacet(k))?;
        mats.push(basis * Mat2::new(0.0, 0.0, 0.0, -1.0) * inv);
    }
    Ok(ControlSet::finite_allow_reducible(mats)?)
}
