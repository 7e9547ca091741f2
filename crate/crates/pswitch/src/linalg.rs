//! Closed-form 2×2 linear algebra and planar angle helpers.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Relative determinant threshold below which a matrix counts as degenerate.
pub const EPS_DET: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("zero vector where a direction is required")]
    ZeroVector,
    #[error("matrix is not degenerate (|det| = {0:e})")]
    NotDegenerate(f64),
    #[error("matrix is numerically zero")]
    ZeroMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x1: f64,
    pub x2: f64,
}

impl Vec2 {
    pub const fn new(x1: f64, x2: f64) -> Self {
        Vec2 { x1, x2 }
    }

    /// Unit vector at polar angle `t`.
    pub fn polar(t: f64) -> Self {
        Vec2::new(t.cos(), t.sin())
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x1 * o.x1 + self.x2 * o.x2
    }

    /// z-component of the planar cross product.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x1 * o.x2 - self.x2 * o.x1
    }

    pub fn norm(self) -> f64 {
        self.x1.hypot(self.x2)
    }

    pub fn is_finite(self) -> bool {
        self.x1.is_finite() && self.x2.is_finite()
    }

    pub fn normalized(self) -> Result<Vec2, LinalgError> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(LinalgError::ZeroVector);
        }
        Ok(self * (1.0 / n))
    }

    /// Counterclockwise rotation by a quarter turn.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.x2, self.x1)
    }

    pub fn rotate(self, t: f64) -> Vec2 {
        let (s, c) = t.sin_cos();
        Vec2::new(c * self.x1 - s * self.x2, s * self.x1 + c * self.x2)
    }

    /// Polar angle in (-π, π].
    pub fn arg(self) -> f64 {
        let a = self.x2.atan2(self.x1);
        if a == -PI {
            PI
        } else {
            a
        }
    }

    pub fn outer(self, o: Vec2) -> Mat2 {
        Mat2::new(self.x1 * o.x1, self.x1 * o.x2, self.x2 * o.x1, self.x2 * o.x2)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x1 + o.x1, self.x2 + o.x2)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x1 - o.x1, self.x2 - o.x2)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x1, -self.x2)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x1 * s, self.x2 * s)
    }
}

/// Dense 2×2 real matrix, row-major entries.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Mat2 {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

impl Mat2 {
    pub const fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Mat2 { a11, a12, a21, a22 }
    }

    pub const fn identity() -> Self {
        Mat2::new(1.0, 0.0, 0.0, 1.0)
    }

    pub const fn zero() -> Self {
        Mat2::new(0.0, 0.0, 0.0, 0.0)
    }

    pub fn from_rows(r: [[f64; 2]; 2]) -> Self {
        Mat2::new(r[0][0], r[0][1], r[1][0], r[1][1])
    }

    pub fn rows(&self) -> [[f64; 2]; 2] {
        [[self.a11, self.a12], [self.a21, self.a22]]
    }

    /// Matrix whose columns are `c1` and `c2`.
    pub fn from_cols(c1: Vec2, c2: Vec2) -> Self {
        Mat2::new(c1.x1, c2.x1, c1.x2, c2.x2)
    }

    pub fn is_finite(&self) -> bool {
        self.a11.is_finite() && self.a12.is_finite() && self.a21.is_finite() && self.a22.is_finite()
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    pub fn transpose(&self) -> Mat2 {
        Mat2::new(self.a11, self.a21, self.a12, self.a22)
    }

    pub fn frobenius(&self) -> f64 {
        (self.a11 * self.a11 + self.a12 * self.a12 + self.a21 * self.a21 + self.a22 * self.a22).sqrt()
    }

    pub fn apply(&self, v: Vec2) -> Vec2 {
        Vec2::new(self.a11 * v.x1 + self.a12 * v.x2, self.a21 * v.x1 + self.a22 * v.x2)
    }

    pub fn inverse(&self) -> Option<Mat2> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        Some(Mat2::new(self.a22 / d, -self.a12 / d, -self.a21 / d, self.a11 / d))
    }

    pub fn shift(&self, alpha: f64) -> Mat2 {
        Mat2::new(self.a11 - alpha, self.a12, self.a21, self.a22 - alpha)
    }

    pub fn is_degenerate(&self) -> bool {
        let f = self.frobenius();
        self.det().abs() <= EPS_DET * f * f
    }

    /// True when the matrix is a multiple of the identity (relative tolerance).
    pub fn is_scalar(&self) -> bool {
        let f = self.frobenius().max(f64::MIN_POSITIVE);
        let off = self.a12.abs().max(self.a21.abs()).max((self.a11 - self.a22).abs());
        off <= 1e-12 * f
    }

    /// Largest absolute entry difference.
    pub fn max_abs_diff(&self, o: &Mat2) -> f64 {
        (self.a11 - o.a11)
            .abs()
            .max((self.a12 - o.a12).abs())
            .max((self.a21 - o.a21).abs())
            .max((self.a22 - o.a22).abs())
    }

    /// Closed-form matrix exponential `exp(t·self)`.
    pub fn expm(&self, t: f64) -> Mat2 {
        let m = *self * t;
        let mu = m.trace() / 2.0;
        let b = m.shift(mu);
        // b has zero trace, so b² = -det(b)·I.
        let q = -b.det();
        let (c, s) = if q > 0.0 {
            let w = q.sqrt();
            (w.cosh(), if w > 0.0 { w.sinh() / w } else { 1.0 })
        } else if q < 0.0 {
            let w = (-q).sqrt();
            (w.cos(), w.sin() / w)
        } else {
            (1.0, 1.0)
        };
        (Mat2::identity() * c + b * s) * mu.exp()
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        Mat2::new(self.a11 + o.a11, self.a12 + o.a12, self.a21 + o.a21, self.a22 + o.a22)
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        Mat2::new(self.a11 - o.a11, self.a12 - o.a12, self.a21 - o.a21, self.a22 - o.a22)
    }
}

impl Mul<f64> for Mat2 {
    type Output = Mat2;
    fn mul(self, s: f64) -> Mat2 {
        Mat2::new(self.a11 * s, self.a12 * s, self.a21 * s, self.a22 * s)
    }
}

impl Mul<Mat2> for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.a11 * o.a11 + self.a12 * o.a21,
            self.a11 * o.a12 + self.a12 * o.a22,
            self.a21 * o.a11 + self.a22 * o.a21,
            self.a21 * o.a12 + self.a22 * o.a22,
        )
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self * -1.0
    }
}

impl fmt::Display for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a11, self.a12, self.a21, self.a22)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SpectrumKind {
    RealPair { l1: f64, l2: f64 },
    ComplexPair { alpha: f64, beta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spectrum2 {
    pub kind: SpectrumKind,
    pub abscissa: f64,
}

impl Spectrum2 {
    pub fn is_complex(&self) -> bool {
        matches!(self.kind, SpectrumKind::ComplexPair { .. })
    }
}

pub fn spectrum(m: &Mat2) -> Spectrum2 {
    let h = m.trace() / 2.0;
    // (a11 - a22)²/4 + a12·a21 avoids cancellation in h² - det.
    let d = (m.a11 - m.a22) / 2.0;
    let disc = d * d + m.a12 * m.a21;
    if disc >= 0.0 {
        let r = disc.sqrt();
        let (l1, l2) = (h - r, h + r);
        Spectrum2 {
            kind: SpectrumKind::RealPair { l1, l2 },
            abscissa: l2,
        }
    } else {
        Spectrum2 {
            kind: SpectrumKind::ComplexPair {
                alpha: h,
                beta: (-disc).sqrt(),
            },
            abscissa: h,
        }
    }
}

fn sym_eigen(a: f64, b: f64, c: f64) -> (f64, f64) {
    // eigenvalues of [[a, b], [b, c]], ascending
    let h = (a + c) / 2.0;
    let r = ((a - c) / 2.0).hypot(b);
    (h - r, h + r)
}

/// Singular values (σ1 ≤ σ2) from the eigenvalues of mᵀm.
pub fn singular_values(m: &Mat2) -> (f64, f64) {
    let g = m.transpose() * *m;
    let (e1, e2) = sym_eigen(g.a11, g.a12, g.a22);
    let s2 = e2.max(0.0).sqrt();
    // σ1·σ2 = |det| is the accurate route for the small one.
    let s1 = if s2 > 0.0 { m.det().abs() / s2 } else { e1.max(0.0).sqrt() };
    (s1.min(s2), s2)
}

/// Unit vector spanning the null space of a (numerically) rank-one matrix.
/// Picks the row with the larger norm so the result is stable.
fn null_of_rank_one(m: &Mat2) -> Vec2 {
    let r1 = Vec2::new(m.a11, m.a12);
    let r2 = Vec2::new(m.a21, m.a22);
    let r = if r1.norm() >= r2.norm() { r1 } else { r2 };
    let v = Vec2::new(-r.x2, r.x1);
    v.normalized().unwrap_or(Vec2::new(1.0, 0.0))
}

fn range_of_rank_one(m: &Mat2) -> Vec2 {
    let c1 = Vec2::new(m.a11, m.a21);
    let c2 = Vec2::new(m.a12, m.a22);
    let c = if c1.norm() >= c2.norm() { c1 } else { c2 };
    c.normalized().unwrap_or(Vec2::new(1.0, 0.0))
}

fn check_degenerate(m: &Mat2) -> Result<(), LinalgError> {
    let f = m.frobenius();
    if f <= 1e-300 {
        return Err(LinalgError::ZeroMatrix);
    }
    if m.det().abs() > EPS_DET * f * f {
        return Err(LinalgError::NotDegenerate(m.det()));
    }
    Ok(())
}

pub fn kernel_direction(m: &Mat2) -> Result<Vec2, LinalgError> {
    check_degenerate(m)?;
    Ok(canonical_line(null_of_rank_one(m)))
}

pub fn image_direction(m: &Mat2) -> Result<Vec2, LinalgError> {
    check_degenerate(m)?;
    Ok(canonical_line(range_of_rank_one(m)))
}

/// Kernel and image without the degeneracy check, for matrices known to be singular
/// up to a caller-chosen tolerance.
pub fn kernel_image_unchecked(m: &Mat2) -> (Vec2, Vec2) {
    (canonical_line(null_of_rank_one(m)), canonical_line(range_of_rank_one(m)))
}

/// Unit eigenvector of `m` for the real eigenvalue `lambda`.
pub fn eigenvector(m: &Mat2, lambda: f64) -> Vec2 {
    let b = m.shift(lambda);
    if b.frobenius() <= 1e-14 * m.frobenius().max(1e-300) {
        return Vec2::new(1.0, 0.0);
    }
    canonical_line(null_of_rank_one(&b))
}

/// Orient a line direction so its angle lies in [0, π).
pub fn canonical_line(v: Vec2) -> Vec2 {
    if v.x2 < 0.0 || (v.x2 == 0.0 && v.x1 < 0.0) {
        -v
    } else {
        v
    }
}

/// Counterclockwise angle from the direction of `a` to that of `b`, in (-π, π].
pub fn oriented_angle(a: Vec2, b: Vec2) -> Result<f64, LinalgError> {
    if a.norm() == 0.0 || b.norm() == 0.0 {
        return Err(LinalgError::ZeroVector);
    }
    let t = a.cross(b).atan2(a.dot(b));
    Ok(if t <= -PI { PI } else { t })
}

pub fn is_metzler(m: &Mat2) -> bool {
    m.a12 >= 0.0 && m.a21 >= 0.0
}

/// Angle normalized to [0, 2π).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Angle(f64);

impl Angle {
    pub fn new(t: f64) -> Self {
        Angle(wrap_2pi(t))
    }

    /// Line direction angle in [0, π).
    pub fn line(t: f64) -> Self {
        Angle(wrap_pi(t))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

pub fn wrap_2pi(t: f64) -> f64 {
    let tau = 2.0 * PI;
    let r = t.rem_euclid(tau);
    if r >= tau {
        0.0
    } else {
        r
    }
}

pub fn wrap_pi(t: f64) -> f64 {
    let r = t.rem_euclid(PI);
    if r >= PI {
        0.0
    } else {
        r
    }
}

/// Angle of a line direction in [0, π).
pub fn line_angle(v: Vec2) -> f64 {
    wrap_pi(v.x2.atan2(v.x1))
}
