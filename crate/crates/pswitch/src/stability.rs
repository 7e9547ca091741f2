//! Stability decision, Lyapunov exponent by bisection, complex-dominance certificate.

use std::f64::consts::PI;

use log::debug;
use serde::{Deserialize, Serialize};

use crate::control_set::{ControlSet, Side};
use crate::linalg::{spectrum, Mat2, SpectrumKind, Vec2};
use crate::trajectory::{integrate_leading, IntegratorOptions, RoundOutcome, TrajectoryError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StabilityError {
    #[error("integrator failed to converge near gamma = {0}")]
    NonConvergence(f64),
    #[error("bisection bracket [{lo}, {hi}] does not straddle the exponent: {detail}")]
    BracketFailure { lo: f64, hi: f64, detail: String },
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("trajectory error: {0}")]
    Trajectory(TrajectoryError),
}

impl From<TrajectoryError> for StabilityError {
    fn from(e: TrajectoryError) -> Self {
        match e {
            TrajectoryError::NonConvergence(g) => StabilityError::NonConvergence(g),
            other => StabilityError::Trajectory(other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StabilityReason {
    NonnegEigenvalueInHull { witness: Mat2, eigenvector: Vec2 },
    IncreasingRound { side: Side, lambda: f64 },
    AllRoundsDecreasing { left: RoundOutcome, right: RoundOutcome },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub stable: bool,
    pub reason: StabilityReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DominanceCertificate {
    None,
    Complex { matrix: Mat2, ellipse: Mat2 },
    Real(Vec<Mat2>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovResult {
    pub sigma: f64,
    pub error: f64,
    pub iterations: usize,
}

pub const MAX_BISECTION: usize = 60;

pub fn decide_stability(set: &ControlSet) -> Result<StabilityVerdict, StabilityError> {
    decide_stability_with(set, &IntegratorOptions::default())
}

pub fn decide_stability_with(set: &ControlSet, opts: &IntegratorOptions) -> Result<StabilityVerdict, StabilityError> {
    if let Some(v) = set.common_eigenvector() {
        debug!("deciding stability of a reducible set (common eigenvector ({:.6}, {:.6}))", v.x1, v.x2);
    }
    if let Some(w) = set.nonneg_eigenvalue_witness() {
        return Ok(StabilityVerdict {
            stable: false,
            reason: StabilityReason::NonnegEigenvalueInHull { witness: w.matrix, eigenvector: w.eigenvector },
        });
    }
    let x0 = Vec2::new(1.0, 0.0);
    let (_, left) = integrate_leading(set, x0, Side::Left, PI, opts)?;
    let (_, right) = integrate_leading(set, x0, Side::Right, PI, opts)?;
    debug!("left {left:?}, right {right:?}");
    for (side, out) in [(Side::Left, left), (Side::Right, right)] {
        if let RoundOutcome::Round { lambda } = out {
            if lambda >= 1.0 {
                return Ok(StabilityVerdict { stable: false, reason: StabilityReason::IncreasingRound { side, lambda } });
            }
        }
    }
    Ok(StabilityVerdict { stable: true, reason: StabilityReason::AllRoundsDecreasing { left, right } })
}

/// Initial bisection bracket: max spectral abscissa and max Frobenius norm.
pub fn initial_bracket(set: &ControlSet) -> (f64, f64) {
    let lo = set.generators().iter().map(|m| spectrum(m).abscissa).fold(f64::NEG_INFINITY, f64::max);
    let hi = set.max_frobenius() * (1.0 + 1e-6) + 1e-9;
    (lo, hi.max(lo + 1e-9))
}

pub fn lyapunov_exponent(set: &ControlSet, tol: f64) -> Result<LyapunovResult, StabilityError> {
    lyapunov_exponent_with(set, tol, &IntegratorOptions::default())
}

pub fn lyapunov_exponent_with(
    set: &ControlSet,
    tol: f64,
    opts: &IntegratorOptions,
) -> Result<LyapunovResult, StabilityError> {
    if !(tol > 0.0) {
        return Err(StabilityError::InvalidTolerance(tol));
    }
    let (mut lo, mut hi) = initial_bracket(set);
    // σ ≥ the abscissa of every generator, so lo is unstable by construction.
    let top = decide_stability_with(&set.shifted(hi), opts)?;
    if !top.stable {
        return Err(StabilityError::BracketFailure {
            lo,
            hi,
            detail: format!("shift by the upper bound is unstable: {:?}", top.reason),
        });
    }
    let mut it = 0;
    while 0.5 * (hi - lo) > tol && it < MAX_BISECTION {
        let mid = 0.5 * (lo + hi);
        if decide_stability_with(&set.shifted(mid), opts)?.stable {
            hi = mid;
        } else {
            lo = mid;
        }
        it += 1;
    }
    Ok(LyapunovResult { sigma: 0.5 * (lo + hi), error: 0.5 * (hi - lo), iterations: it })
}

/// Symmetric matrix with M·B + Bᵀ·M = 0 for traceless B with complex spectrum, M₁₁ = 1.
pub fn rotation_form(b: &Mat2) -> Mat2 {
    let (a, bb, c) = (b.a11, b.a12, b.a21);
    let mut m = Mat2::new(-c, a, a, bb);
    if m.a11 < 0.0 {
        m = -m;
    }
    m * (1.0 / m.a11)
}

/// Largest eigenvalue of a symmetric 2×2 matrix.
pub fn sym_lambda_max(s: &Mat2) -> f64 {
    let h = 0.5 * (s.a11 + s.a22);
    let d = 0.5 * (s.a11 - s.a22);
    let o = 0.5 * (s.a12 + s.a21);
    h + (d * d + o * o).sqrt()
}

pub fn complex_dominance(set: &ControlSet, sigma: f64) -> DominanceCertificate {
    let tol = 1e-6 * sigma.abs().max(1.0);
    let r = set.radius();
    for a in set.generators() {
        let sp = spectrum(a);
        let SpectrumKind::ComplexPair { alpha, .. } = sp.kind else { continue };
        if (alpha - sigma).abs() > tol {
            continue;
        }
        let m = rotation_form(&a.shift(alpha));
        let m_norm = sym_lambda_max(&m);
        let ok = set.generators().iter().all(|g| {
            let s = g.transpose() * m + m * *g - m * (2.0 * sigma);
            sym_lambda_max(&s) + 2.0 * r * m_norm <= 1e-8
        });
        if ok {
            return DominanceCertificate::Complex { matrix: *a, ellipse: m };
        }
    }
    DominanceCertificate::None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_forms() {
        assert_eq!(rotation_form(&Mat2::new(0.0, -1.0, 1.0, 0.0)), Mat2::identity());
        assert_eq!(rotation_form(&Mat2::new(0.0, -4.0, 1.0, 0.0)), Mat2::new(1.0, 0.0, 0.0, 4.0));
    }

    #[test]
    fn rotation_is_unstable() {
        let s = ControlSet::finite(vec![Mat2::new(0.0, -1.0, 1.0, 0.0)]).unwrap();
        assert!(!decide_stability(&s).unwrap().stable);
    }
}
