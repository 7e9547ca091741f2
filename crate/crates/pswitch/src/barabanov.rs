//! Barabanov unit sphere of a planar system with σ = 0: R/D/H/P partition, budget,
//! assembly, uniqueness classification and an independent geometric checker.

use std::f64::consts::PI;

use log::{debug, info, warn};
use serde::{Deserialize, Serialize};

use crate::control_set::{golden_min, pencil_of, ControlSet, ReversePencil, Side};
use crate::linalg::{eigenvector, kernel_image_unchecked, line_angle, singular_values, spectrum, Mat2, SpectrumKind, Vec2};
use crate::stability::{complex_dominance, lyapunov_exponent_with, DominanceCertificate, LyapunovResult, StabilityError};
use crate::trajectory::{hermite, integrate_rate, interp_nodes, IntegratorOptions, Node, RateEnd, TrajectoryError};

pub const EPS_CLOSE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BuildError {
    #[error("the set is not normalized to sigma = 0")]
    SigmaNotZero,
    #[error("complex dominance: use the ellipse path")]
    ComplexDominant,
    #[error("interval has the wrong tag for this operation")]
    WrongTag,
    #[error("no leading trajectory crosses the interval ({0}, {1})")]
    MissingTrajectory(f64, f64),
    #[error("budget {target} outside [{lo}, {hi}]; sigma is probably not precise enough")]
    BudgetInfeasible { target: f64, lo: f64, hi: f64 },
    #[error("s-vector rejected: {0}")]
    ChoiceOutOfBracket(String),
    #[error("closure violation |g(pi) - g(0)| = {0}")]
    ClosureViolation(f64),
    #[error("inconsistent interval structure: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Stability(#[from] StabilityError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum IntervalKind {
    R { pencil: ReversePencil, delta: f64 },
    D { matrices: Vec<Mat2> },
    H { source_end: Side, delta: f64 },
    P { m: f64, big_m: f64, s: Option<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalTag {
    pub kind: IntervalKind,
    pub span: (f64, f64),
}

impl IntervalTag {
    pub fn letter(&self) -> char {
        match self.kind {
            IntervalKind::R { .. } => 'R',
            IntervalKind::D { .. } => 'D',
            IntervalKind::H { .. } => 'H',
            IntervalKind::P { .. } => 'P',
        }
    }
}

/// A degenerate operator of the σ-shifted set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Degenerate {
    pub matrix: Mat2,
    pub kernel: Vec2,
    pub image: Vec2,
    pub kernel_angle: f64,
}

/// Two leading trajectories across a kernel-free interval (a, b).
#[derive(Debug, Clone, PartialEq)]
pub struct FreeGap {
    pub a: f64,
    pub b: f64,
    /// G_L(θ) − g(b), ascending in θ.
    left: Vec<Node>,
    /// G_R(θ) − g(a), ascending in θ.
    right: Vec<Node>,
    pub c_lo: f64,
    pub c_hi: f64,
    pub m: f64,
    pub big_m: f64,
}

impl FreeGap {
    fn delta_at(&self, c: f64) -> Option<f64> {
        Some(interp_nodes(&self.right, c)? - interp_nodes(&self.left, c)?)
    }

    fn domain(&self) -> (f64, f64) {
        let lmin = self.left.first().map_or(self.b, |n| n.gamma);
        let rmax = self.right.last().map_or(self.a, |n| n.gamma);
        (self.c_lo.max(lmin), self.c_hi.min(rmax))
    }

    pub fn is_single(&self) -> bool {
        self.c_hi - self.c_lo <= 1e-7
    }

    /// Source point c with Δ(c) = s (clamped to the admissible range).
    pub fn source_for(&self, s: f64) -> f64 {
        self.source_for_tol(s, 1e-10)
    }

    /// As `source_for`, stopping once |Δ(c) − s| ≤ tol.
    pub fn source_for_tol(&self, s: f64, tol: f64) -> f64 {
        let (lo, hi) = self.domain();
        if hi <= lo {
            return lo;
        }
        let dlo = self.delta_at(lo).unwrap_or(f64::NEG_INFINITY);
        let dhi = self.delta_at(hi).unwrap_or(f64::INFINITY);
        if s <= dlo {
            return lo;
        }
        if s >= dhi {
            return hi;
        }
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            let c = 0.5 * (a + b);
            let d = self.delta_at(c).unwrap_or(0.0);
            if (d - s).abs() <= tol || b - a <= 1e-15 {
                return c;
            }
            if d < s {
                a = c;
            } else {
                b = c;
            }
        }
        0.5 * (a + b)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum GapKind {
    Reverse { pencil: ReversePencil, delta: f64 },
    Free(FreeGap),
}

#[derive(Debug, Clone, PartialEq)]
struct Gap {
    a: f64,
    b: f64,
    kind: GapKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub gamma_ref: f64,
    pub tags: Vec<IntervalTag>,
    pub degenerate_count: usize,
    gaps: Vec<Gap>,
    set: ControlSet,
}

impl Partition {
    /// (m, M) for each P interval in order of start angle.
    pub fn p_bounds(&self) -> Vec<(f64, f64)> {
        self.gaps
            .iter()
            .filter_map(|g| match &g.kind {
                GapKind::Free(f) if !f.is_single() => Some((f.m, f.big_m)),
                _ => None,
            })
            .collect()
    }

    /// Right-hand side of the closure identity: −(Σ over R and H of Δ).
    pub fn target(&self) -> f64 {
        -self
            .gaps
            .iter()
            .map(|g| match &g.kind {
                GapKind::Reverse { delta, .. } => *delta,
                GapKind::Free(f) if f.is_single() => f.m,
                _ => 0.0,
            })
            .sum::<f64>()
    }

    pub fn set(&self) -> &ControlSet {
        &self.set
    }

    /// Kernel-free gaps in order, with their two bounding trajectories.
    pub fn free_gaps(&self) -> Vec<&FreeGap> {
        self.gaps
            .iter()
            .filter_map(|g| match &g.kind {
                GapKind::Free(f) => Some(f),
                _ => None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Piece {
    Hermite(Node, Node),
    Line(Node, Node),
    Ellipse { lo: f64, hi: f64, m: Mat2, c: f64 },
}

impl Piece {
    fn lo(&self) -> f64 {
        match self {
            Piece::Hermite(a, _) | Piece::Line(a, _) => a.gamma,
            Piece::Ellipse { lo, .. } => *lo,
        }
    }

    fn hi(&self) -> f64 {
        match self {
            Piece::Hermite(_, b) | Piece::Line(_, b) => b.gamma,
            Piece::Ellipse { hi, .. } => *hi,
        }
    }

    fn value(&self, t: f64) -> f64 {
        match self {
            Piece::Hermite(a, b) => hermite(a, b, t),
            Piece::Line(a, b) => {
                let pa = Vec2::polar(a.gamma) * a.g.exp();
                let d = Vec2::polar(b.gamma) * b.g.exp() - pa;
                (pa.cross(d) / Vec2::polar(t).cross(d)).ln()
            }
            Piece::Ellipse { m, c, .. } => {
                let u = Vec2::polar(t);
                c - 0.5 * u.dot(m.apply(u)).ln()
            }
        }
    }

    fn slope(&self, t: f64) -> f64 {
        match self {
            Piece::Hermite(a, b) => {
                let h = b.gamma - a.gamma;
                if h == 0.0 {
                    return a.d_hi;
                }
                let s = (t - a.gamma) / h;
                let (da, db) = (a.d_hi, b.d_lo);
                let (da, db) = (if da.is_finite() { da } else { 0.0 }, if db.is_finite() { db } else { 0.0 });
                let d00 = 6.0 * s * s - 6.0 * s;
                let d10 = 3.0 * s * s - 4.0 * s + 1.0;
                let d01 = -d00;
                let d11 = 3.0 * s * s - 2.0 * s;
                (d00 * a.g + d01 * b.g) / h + d10 * da + d11 * db
            }
            Piece::Line(a, b) => {
                let pa = Vec2::polar(a.gamma) * a.g.exp();
                let d = Vec2::polar(b.gamma) * b.g.exp() - pa;
                let u = Vec2::polar(t);
                -u.perp().cross(d) / u.cross(d)
            }
            Piece::Ellipse { m, .. } => {
                let u = Vec2::polar(t);
                -u.perp().dot(m.apply(u)) / u.dot(m.apply(u))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SphereKind {
    Ellipse,
    Periodic,
    Partitioned,
    Polygon,
}

/// Unit sphere as g(γ) = ln‖x(γ)‖ on [γ_ref, γ_ref + π], extended by central symmetry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereModel {
    pub kind: SphereKind,
    pub partition: Vec<IntervalTag>,
    pub gamma_ref: f64,
    pub g0: f64,
    pub s_vector: Vec<f64>,
    pieces: Vec<Piece>,
}

impl SphereModel {
    fn new(kind: SphereKind, partition: Vec<IntervalTag>, gamma_ref: f64, s_vector: Vec<f64>, pieces: Vec<Piece>) -> Self {
        let mut s = SphereModel { kind, partition, gamma_ref, g0: 0.0, s_vector, pieces };
        s.g0 = s.g(gamma_ref);
        s
    }

    pub fn ellipse(m: Mat2) -> Self {
        let piece = Piece::Ellipse { lo: 0.0, hi: PI, m, c: 0.0 };
        SphereModel::new(SphereKind::Ellipse, vec![], 0.0, vec![], vec![piece])
    }

    /// Exact polygon, vertices counterclockwise and centrally symmetric.
    pub fn from_polygon(vertices: &[Vec2]) -> Self {
        let n = vertices.len() / 2;
        let g0 = vertices[0].arg();
        let mut nodes = Vec::with_capacity(n + 1);
        let mut prev = g0;
        for k in 0..=n {
            let v = vertices[k % vertices.len()];
            let mut t = v.arg();
            while t < prev - 1e-12 {
                t += 2.0 * PI;
            }
            if k == n {
                t = g0 + PI;
            }
            prev = t;
            nodes.push(Node { gamma: t, g: v.norm().ln(), d_lo: 0.0, d_hi: 0.0 });
        }
        let pieces = nodes.windows(2).map(|w| Piece::Line(w[0], w[1])).collect();
        SphereModel::new(SphereKind::Polygon, vec![], g0, vec![], pieces)
    }

    fn locate(&self, gamma: f64) -> (usize, f64) {
        let t = self.gamma_ref + (gamma - self.gamma_ref).rem_euclid(PI);
        let k = self.pieces.partition_point(|p| p.lo() <= t);
        (k.saturating_sub(1).min(self.pieces.len() - 1), t)
    }

    /// ln of the Euclidean radius in direction γ.
    pub fn g(&self, gamma: f64) -> f64 {
        let (k, t) = self.locate(gamma);
        self.pieces[k].value(t)
    }

    /// One-sided derivatives (from below, from above) of g at γ.
    pub fn slopes(&self, gamma: f64) -> (f64, f64) {
        let (k, t) = self.locate(gamma);
        let p = &self.pieces[k];
        let hi = p.slope(t);
        if (t - p.lo()).abs() <= 1e-12 {
            let prev = if k == 0 { &self.pieces[self.pieces.len() - 1] } else { &self.pieces[k - 1] };
            let t_prev = if k == 0 { prev.hi() } else { p.lo() };
            (prev.slope(t_prev), hi)
        } else {
            (hi, hi)
        }
    }

    pub fn radius(&self, gamma: f64) -> f64 {
        self.g(gamma).exp()
    }

    pub fn point(&self, gamma: f64) -> Vec2 {
        Vec2::polar(gamma) * self.radius(gamma)
    }

    /// Closed polyline sampled at θ = 2πk/n.
    pub fn polyline(&self, n: usize) -> Vec<(f64, Vec2)> {
        (0..n)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / n as f64;
                (t, self.point(t))
            })
            .collect()
    }

    /// Angles in [γ_ref, γ_ref + π) where the one-sided slopes differ by more than `thresh` in tangent direction.
    pub fn corners(&self, thresh: f64) -> Vec<f64> {
        let mut out = Vec::new();
        for p in &self.pieces {
            let t = p.lo();
            let (dl, dh) = self.slopes(t);
            if (dl.atan() - dh.atan()).abs() > thresh {
                out.push(t);
            }
        }
        out
    }

    pub fn piece_bounds(&self) -> Vec<f64> {
        self.pieces.iter().map(|p| p.lo()).collect()
    }

    /// g − mean(g) over a uniform grid, for scale-free comparisons.
    pub fn normalized_profile(&self, n: usize) -> Vec<f64> {
        let v: Vec<f64> = (0..n).map(|k| self.g(2.0 * PI * k as f64 / n as f64)).collect();
        let mean = v.iter().sum::<f64>() / n as f64;
        v.into_iter().map(|x| x - mean).collect()
    }
}

/// Largest relative radial gap between two spheres after removing the scale.
pub fn max_radial_gap(a: &SphereModel, b: &SphereModel, n: usize) -> f64 {
    let pa = a.normalized_profile(n);
    let pb = b.normalized_profile(n);
    pa.iter().zip(pb.iter()).map(|(x, y)| ((x - y).exp() - 1.0).abs()).fold(0.0, f64::max)
}

fn real_lambda_max(m: &Mat2) -> f64 {
    match spectrum(m).kind {
        SpectrumKind::RealPair { l2, .. } => l2,
        SpectrumKind::ComplexPair { .. } => f64::NEG_INFINITY,
    }
}

/// Interior local maxima (t, λ) of the largest real eigenvalue along (1 − t)A + tB.
pub fn segment_real_maxima(a: &Mat2, b: &Mat2) -> Vec<(f64, f64)> {
    const N: usize = 512;
    let lam = |t: f64| real_lambda_max(&(*a * (1.0 - t) + *b * t));
    let v: Vec<f64> = (0..=N).map(|k| lam(k as f64 / N as f64)).collect();
    let mut out = Vec::new();
    for k in 1..N {
        if v[k].is_finite() && v[k] >= v[k - 1] && v[k] >= v[k + 1] {
            let (t, neg) = golden_min(&|t| -lam(t), (k - 1) as f64 / N as f64, (k + 1) as f64 / N as f64, 1e-13);
            if t > 1e-9 && t < 1.0 - 1e-9 && out.iter().all(|&(s, _): &(f64, f64)| (s - t).abs() > 1e-9) {
                out.push((t, -neg));
            }
        }
    }
    out
}

/// Largest real eigenvalue over the generators and the segments between them.
pub fn real_abscissa(gens: &[Mat2]) -> f64 {
    let mut best = gens.iter().map(real_lambda_max).fold(f64::NEG_INFINITY, f64::max);
    for i in 0..gens.len() {
        for j in (i + 1)..gens.len() {
            for (_, l) in segment_real_maxima(&gens[i], &gens[j]) {
                best = best.max(l);
            }
        }
    }
    best
}

/// Degenerate operators of a σ-shifted set after snapping near-degenerate generators.
pub fn snap_degenerates(set: &ControlSet, snap_tol: f64) -> (ControlSet, Vec<Degenerate>) {
    let mut degs = Vec::new();
    if set.radius() == 0.0 {
        let gens: Vec<Mat2> = set
            .generators()
            .iter()
            .map(|a| match spectrum(a).kind {
                SpectrumKind::RealPair { l1, l2 } if l2.abs() <= snap_tol * a.frobenius().max(1.0) => {
                    let d = a.shift(l2);
                    let k = eigenvector(a, l2);
                    let i = eigenvector(a, l1);
                    let i = if k.cross(i).abs() < 1e-12 { kernel_image_unchecked(&d).1 } else { i };
                    degs.push(Degenerate { matrix: d, kernel: k, image: i, kernel_angle: line_angle(k) });
                    d
                }
                _ => *a,
            })
            .collect();
        let scale = gens.iter().map(|g| g.frobenius()).fold(1.0, f64::max);
        let flat = |m: &Mat2| real_lambda_max(m).abs() <= snap_tol * scale;
        for i in 0..gens.len() {
            for j in (i + 1)..gens.len() {
                // det vanishes along the whole segment: pencil or common kernel, both ends already listed
                if flat(&gens[i]) && flat(&gens[j]) {
                    continue;
                }
                for (t, l) in segment_real_maxima(&gens[i], &gens[j]) {
                    if l.abs() > snap_tol * scale {
                        continue;
                    }
                    let d = (gens[i] * (1.0 - t) + gens[j] * t).shift(l);
                    let (k, im) = kernel_image_unchecked(&d);
                    debug!("interior degenerate at t = {t} on segment ({i}, {j})");
                    degs.push(Degenerate { matrix: d, kernel: k, image: im, kernel_angle: line_angle(k) });
                }
            }
        }
        (set.with_generators(gens), degs)
    } else {
        let r = set.radius();
        let mut r_new = r;
        for c in set.generators() {
            let (s1, _) = singular_values(c);
            if (s1 - r).abs() <= snap_tol * s1.max(1.0) {
                r_new = r_new.min(s1);
                let g = c.transpose() * *c;
                let k = eigenvector(&g, s1 * s1);
                let w = if s1 > 0.0 { c.apply(k) * (1.0 / s1) } else { eigenvector(&(*c * c.transpose()), 0.0) };
                let d = *c - w.outer(k) * s1;
                let (_, im) = kernel_image_unchecked(&d);
                degs.push(Degenerate { matrix: d, kernel: k, image: im, kernel_angle: line_angle(k) });
            }
        }
        (set.with_radius(r_new), degs)
    }
}

fn in_ccw_arc(x: f64, from: f64, to: f64) -> bool {
    (x - from).rem_euclid(PI) < (to - from).rem_euclid(PI)
}

/// Analyzes a kernel-free interval (a, b) by integrating both leading fields across it.
pub fn analyze_free_gap(set: &ControlSet, a: f64, b: f64, opts: &IntegratorOptions) -> Result<FreeGap, BuildError> {
    let eps = 1e-10 * (b - a).max(1e-3);
    let lr = integrate_rate(set, Side::Left, b - eps, a + eps, opts)?;
    let rr = integrate_rate(set, Side::Right, a + eps, b - eps, opts)?;
    let mut left = lr.nodes.clone();
    left.reverse();
    let right = rr.nodes.clone();
    // A pole just outside the integration range still makes the bound infinite.
    let pole_l = rate(set, a + eps, Side::Left) < -1e6;
    let pole_r = rate(set, b - eps, Side::Right) > 1e6;
    let (c_lo, l_div) = match lr.end {
        RateEnd::Reached { .. } => (a, pole_l),
        RateEnd::Stopped { at } => (at, false),
        RateEnd::Diverged { at, sign } => {
            if sign < 0.0 {
                warn!("left field diverges with unexpected sign at {at}");
            }
            (at, true)
        }
    };
    let (c_hi, r_div) = match rr.end {
        RateEnd::Reached { .. } => (b, pole_r),
        RateEnd::Stopped { at } => (at, false),
        RateEnd::Diverged { at, .. } => (at, true),
    };
    if c_lo > c_hi + 1e-8 {
        return Err(BuildError::Inconsistent(format!(
            "left trajectories need a source above {c_lo}, right ones below {c_hi} on ({a}, {b})"
        )));
    }
    let mut gap = FreeGap { a, b, left, right, c_lo, c_hi, m: 0.0, big_m: 0.0 };
    let (lo, hi) = gap.domain();
    gap.m = if l_div { f64::NEG_INFINITY } else { gap.delta_at(lo).ok_or(BuildError::MissingTrajectory(a, b))? };
    gap.big_m = if r_div { f64::INFINITY } else { gap.delta_at(hi).ok_or(BuildError::MissingTrajectory(a, b))? };
    if gap.is_single() && !(gap.m.is_finite()) {
        return Err(BuildError::MissingTrajectory(a, b));
    }
    debug!("gap ({a:.6}, {b:.6}): c in [{c_lo:.6}, {c_hi:.6}], m = {}, M = {}", gap.m, gap.big_m);
    Ok(gap)
}

/// (m, M) of a kernel-free interval.
pub fn bounds_m_big_m(set: &ControlSet, a: f64, b: f64, opts: &IntegratorOptions) -> Result<(f64, f64), BuildError> {
    let g = analyze_free_gap(set, a, b, opts)?;
    if g.is_single() {
        return Err(BuildError::MissingTrajectory(a, b));
    }
    Ok((g.m, g.big_m))
}

/// Δ across a reverse segment from kernel direction at `a` to `b`, segment parallel to `image`.
pub fn reverse_delta(a: f64, b: f64, image: Vec2) -> f64 {
    (Vec2::polar(a).cross(image) / Vec2::polar(b).cross(image)).ln()
}

pub fn delta_of_interval(tag: &IntervalTag, set: &ControlSet, opts: &IntegratorOptions) -> Result<f64, BuildError> {
    match &tag.kind {
        IntervalKind::R { pencil, .. } => Ok(reverse_delta(tag.span.0, tag.span.1, pencil.image)),
        IntervalKind::H { .. } => {
            let g = analyze_free_gap(set, tag.span.0, tag.span.1, opts)?;
            Ok(g.m)
        }
        _ => Err(BuildError::WrongTag),
    }
}

/// R/D/H/P partition of [γ_ref, γ_ref + π] for a snapped set with σ = 0.
pub fn build_partition(
    set: &ControlSet,
    degs: &[Degenerate],
    opts: &IntegratorOptions,
) -> Result<Partition, BuildError> {
    let mut kernels: Vec<(f64, Vec<Mat2>)> = Vec::new();
    let mut sorted = degs.to_vec();
    sorted.sort_by(|x, y| x.kernel_angle.partial_cmp(&y.kernel_angle).unwrap());
    for d in &sorted {
        match kernels.last_mut() {
            Some((t, ms)) if d.kernel_angle - *t <= 1e-9 => ms.push(d.matrix),
            _ => kernels.push((d.kernel_angle, vec![d.matrix])),
        }
    }
    if kernels.len() > 1 && kernels[0].0 + PI - kernels[kernels.len() - 1].0 <= 1e-9 {
        let (_, ms) = kernels.pop().unwrap();
        kernels[0].1.extend(ms);
    }
    let mut pencils = Vec::new();
    for i in 0..sorted.len() {
        for j in (i + 1)..sorted.len() {
            if let Some(p) = pencil_of(&sorted[i].matrix, &sorted[j].matrix, 1e-6) {
                let (k1, k2) = (line_angle(p.kernel1), line_angle(p.kernel2));
                let im = line_angle(p.image);
                let (from, to) = if in_ccw_arc(im, k1, k2) { (k2, k1) } else { (k1, k2) };
                pencils.push((p, from, to));
            }
        }
    }
    // kernels strictly inside a reverse arc whose operators share its image lie on the segment
    kernels.retain(|(t, ms)| {
        !pencils.iter().any(|(p, from, to)| {
            let inside = in_ccw_arc(*t, *from, *to) && (t - from).rem_euclid(PI) > 1e-9;
            inside && ms.iter().all(|m| kernel_image_unchecked(m).1.cross(p.image).abs() <= 1e-9)
        })
    });
    let gamma_ref = kernels[0].0;
    let n = kernels.len();
    let mut tags = Vec::new();
    let mut gaps = Vec::new();
    for i in 0..n {
        let a = kernels[i].0;
        let b = if i + 1 < n { kernels[i + 1].0 } else { kernels[0].0 + PI };
        tags.push(IntervalTag { kind: IntervalKind::D { matrices: kernels[i].1.clone() }, span: (a, a) });
        let mid = 0.5 * (a + b);
        let cover = pencils.iter().find(|(_, from, to)| in_ccw_arc(mid, *from, *to));
        if let Some((p, _, _)) = cover {
            let delta = reverse_delta(a, b, p.image);
            if !delta.is_finite() {
                return Err(BuildError::Inconsistent(format!("reverse segment on ({a}, {b}) meets its image line")));
            }
            tags.push(IntervalTag { kind: IntervalKind::R { pencil: *p, delta }, span: (a, b) });
            gaps.push(Gap { a, b, kind: GapKind::Reverse { pencil: *p, delta } });
        } else {
            let fg = analyze_free_gap(set, a, b, opts)?;
            let kind = if fg.is_single() {
                let end = if fg.c_lo - a <= b - fg.c_hi { Side::Left } else { Side::Right };
                if fg.c_lo - a > 1e-7 && b - fg.c_hi > 1e-7 {
                    warn!("single-trajectory interval ({a}, {b}) has an interior source; treating as H");
                }
                IntervalKind::H { source_end: end, delta: fg.m }
            } else {
                IntervalKind::P { m: fg.m, big_m: fg.big_m, s: None }
            };
            tags.push(IntervalTag { kind, span: (a, b) });
            gaps.push(Gap { a, b, kind: GapKind::Free(fg) });
        }
    }
    Ok(Partition { gamma_ref, tags, degenerate_count: degs.len(), gaps, set: set.clone() })
}

/// Picks s ∈ Π[mⱼ, Mⱼ] with Σs = target.
pub fn solve_budget(ps: &[(f64, f64)], target: f64) -> Result<Vec<f64>, BuildError> {
    if let Some(p) = ps.iter().find(|p| p.0.is_nan() || p.1.is_nan() || p.0 > p.1 + EPS_CLOSE) {
        return Err(BuildError::Inconsistent(format!("interval bounds m = {}, M = {}", p.0, p.1)));
    }
    let lo: f64 = ps.iter().map(|p| p.0).sum();
    let hi: f64 = ps.iter().map(|p| p.1).sum();
    if target < lo - EPS_CLOSE || target > hi + EPS_CLOSE || (ps.is_empty() && target.abs() > EPS_CLOSE) {
        return Err(BuildError::BudgetInfeasible { target, lo, hi });
    }
    let finite = ps.iter().all(|p| p.0.is_finite() && p.1.is_finite());
    let mut s: Vec<f64> = if finite {
        ps.iter().map(|p| p.0).collect()
    } else {
        ps.iter().map(|p| 0f64.max(p.0).min(p.1.max(p.0))).collect()
    };
    let mut rem = target - s.iter().sum::<f64>();
    for (i, p) in ps.iter().enumerate() {
        if rem == 0.0 {
            break;
        }
        let step = if rem > 0.0 { (p.1 - s[i]).min(rem) } else { (p.0 - s[i]).max(rem) };
        s[i] += step;
        rem -= step;
    }
    Ok(s)
}

fn push_node(nodes: &mut Vec<Node>, n: Node) {
    if let Some(last) = nodes.last_mut() {
        if (n.gamma - last.gamma).abs() <= 1e-13 {
            last.d_hi = n.d_hi;
            return;
        }
        if n.gamma < last.gamma {
            return;
        }
    }
    nodes.push(n);
}

fn nodes_to_pieces(nodes: &[Node], pieces: &mut Vec<Piece>) {
    for w in nodes.windows(2) {
        if w[1].gamma > w[0].gamma {
            pieces.push(Piece::Hermite(w[0], w[1]));
        }
    }
}

fn rate(set: &ControlSet, gamma: f64, side: Side) -> f64 {
    set.leading_rate(gamma, side).map(|r| r.0).unwrap_or(f64::NAN)
}

/// Assembles the sphere from a partition and an s-vector (solved by water-filling when absent).
pub fn assemble_sphere(part: &Partition, choice: Option<&[f64]>) -> Result<SphereModel, BuildError> {
    let ps = part.p_bounds();
    let target = part.target();
    let s = match choice {
        Some(c) => {
            if c.len() != ps.len() {
                return Err(BuildError::ChoiceOutOfBracket(format!("expected {} values, got {}", ps.len(), c.len())));
            }
            for (i, (v, p)) in c.iter().zip(ps.iter()).enumerate() {
                if *v < p.0 - 1e-9 || *v > p.1 + 1e-9 {
                    return Err(BuildError::ChoiceOutOfBracket(format!("s[{i}] = {v} outside [{}, {}]", p.0, p.1)));
                }
            }
            let sum: f64 = c.iter().sum();
            if (sum - target).abs() > EPS_CLOSE {
                return Err(BuildError::ChoiceOutOfBracket(format!("sum {sum} differs from the budget {target}")));
            }
            c.to_vec()
        }
        None => solve_budget(&ps, target)?,
    };
    let set = &part.set;
    let mut g_a = 0.0;
    let mut pieces = Vec::new();
    let mut tags = part.tags.clone();
    let mut sj = s.iter();
    let mut tag_idx = 0;
    for gap in &part.gaps {
        while tag_idx < tags.len() && tags[tag_idx].span.0 != gap.a || tags[tag_idx].span.1 != gap.b {
            tag_idx += 1;
        }
        match &gap.kind {
            GapKind::Reverse { delta, .. } => {
                let a = Node { gamma: gap.a, g: g_a, d_lo: 0.0, d_hi: 0.0 };
                let b = Node { gamma: gap.b, g: g_a + delta, d_lo: 0.0, d_hi: 0.0 };
                pieces.push(Piece::Line(a, b));
                g_a += delta;
            }
            GapKind::Free(fg) => {
                let delta = if fg.is_single() { fg.m } else { *sj.next().unwrap() };
                if let IntervalKind::P { s, .. } = &mut tags[tag_idx].kind {
                    *s = Some(delta);
                }
                let g_b = g_a + delta;
                let c = if fg.is_single() { if fg.c_lo - fg.a <= fg.b - fg.c_hi { fg.c_lo } else { fg.c_hi } } else { fg.source_for(delta) };
                let mut nodes = Vec::new();
                let first = fg.right.first().or(fg.left.first()).map_or(0.0, |n| n.d_hi);
                push_node(&mut nodes, Node { gamma: gap.a, g: g_a, d_lo: first, d_hi: first });
                for n in fg.right.iter().filter(|n| n.gamma < c) {
                    push_node(&mut nodes, Node { g: g_a + n.g, ..*n });
                }
                let gc = interp_nodes(&fg.right, c).map(|v| g_a + v).or(interp_nodes(&fg.left, c).map(|v| g_b + v));
                if let Some(gc) = gc {
                    if c > gap.a + 1e-12 && c < gap.b - 1e-12 {
                        let (dl, dh) = (rate(set, c, Side::Right), rate(set, c, Side::Left));
                        push_node(&mut nodes, Node { gamma: c, g: gc, d_lo: dl, d_hi: dh });
                    }
                }
                for n in fg.left.iter().filter(|n| n.gamma > c) {
                    push_node(&mut nodes, Node { g: g_b + n.g, ..*n });
                }
                let last = fg.left.last().or(fg.right.last()).map_or(0.0, |n| n.d_lo);
                push_node(&mut nodes, Node { gamma: gap.b, g: g_b, d_lo: last, d_hi: last });
                for n in nodes.iter_mut() {
                    if !n.d_lo.is_finite() {
                        n.d_lo = n.d_hi;
                    }
                    if !n.d_hi.is_finite() {
                        n.d_hi = n.d_lo;
                    }
                }
                nodes_to_pieces(&nodes, &mut pieces);
                g_a = g_b;
            }
        }
    }
    if g_a.abs() > EPS_CLOSE {
        return Err(BuildError::ClosureViolation(g_a.abs()));
    }
    Ok(SphereModel::new(SphereKind::Partitioned, tags, part.gamma_ref, s, pieces))
}

/// Sphere traced by one half-period of a leading trajectory (no degenerate operators).
pub fn periodic_sphere(set: &ControlSet, opts: &IntegratorOptions) -> Result<SphereModel, BuildError> {
    let mut best: Option<(f64, Vec<Node>, f64)> = None;
    for side in [Side::Left, Side::Right] {
        let ri = integrate_rate(set, side, 0.0, side.sign() * PI, opts)?;
        if let RateEnd::Reached { delta } = ri.end {
            if best.as_ref().map_or(true, |b| delta.abs() < b.0.abs()) {
                let mut nodes = ri.nodes.clone();
                let start = if side == Side::Left { 0.0 } else { -PI };
                if side == Side::Right {
                    nodes.reverse();
                }
                best = Some((delta, nodes, start));
            }
        }
    }
    let Some((delta, nodes, start)) = best else {
        return Err(BuildError::MissingTrajectory(0.0, PI));
    };
    if delta.abs() > EPS_CLOSE {
        return Err(BuildError::ClosureViolation(delta.abs()));
    }
    let span_delta = nodes[nodes.len() - 1].g - nodes[0].g;
    let g_start = nodes[0].g;
    let nodes: Vec<Node> = nodes
        .iter()
        .map(|n| {
            let drift = span_delta * (n.gamma - start) / PI;
            Node { gamma: n.gamma, g: n.g - g_start - drift, d_lo: n.d_lo - span_delta / PI, d_hi: n.d_hi - span_delta / PI }
        })
        .collect();
    let mut pieces = Vec::new();
    nodes_to_pieces(&nodes, &mut pieces);
    Ok(SphereModel::new(SphereKind::Periodic, vec![], start, vec![], pieces))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum UniquenessCase {
    AtMostOneDegenerate,
    SingletonP,
    BoundaryBudget,
    InfinitelyMany(String),
    ComplexDominance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub unique: bool,
    pub case: UniquenessCase,
}

pub fn classify_uniqueness(degenerate_count: usize, ps: &[(f64, f64)], target: f64) -> UniquenessReport {
    let case = if degenerate_count <= 1 {
        UniquenessCase::AtMostOneDegenerate
    } else if ps.len() <= 1 {
        UniquenessCase::SingletonP
    } else {
        let lo: f64 = ps.iter().map(|p| p.0).sum();
        let hi: f64 = ps.iter().map(|p| p.1).sum();
        if (target - lo).abs() <= EPS_CLOSE || (target - hi).abs() <= EPS_CLOSE {
            UniquenessCase::BoundaryBudget
        } else {
            let s = solve_budget(ps, target).unwrap_or_else(|_| ps.iter().map(|p| p.0).collect());
            let up: Vec<usize> = (0..ps.len()).filter(|&i| s[i] < ps[i].1 - EPS_CLOSE).collect();
            let down: Vec<usize> = (0..ps.len()).filter(|&j| s[j] > ps[j].0 + EPS_CLOSE).collect();
            let pair = up.iter().flat_map(|&i| down.iter().map(move |&j| (i, j))).find(|(i, j)| i != j);
            let desc = match pair {
                Some((i, j)) => format!("raise s[{i}] and lower s[{j}] by the same small amount"),
                None => "budget strictly inside [sum m, sum M]".to_string(),
            };
            UniquenessCase::InfinitelyMany(desc)
        }
    };
    let unique = !matches!(case, UniquenessCase::InfinitelyMany(_));
    UniquenessReport { unique, case }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarabanovCheck {
    pub passed: bool,
    pub samples: usize,
    pub worst_outward: f64,
    pub worst_outward_at: f64,
    /// Largest distance from tangency (−max outward) over samples.
    pub worst_tangent_gap: f64,
    pub worst_tangent_at: f64,
    pub violations: usize,
    pub tangent_failures: usize,
}

/// Outward normals (incoming side, outgoing side) of the sphere at γ.
pub fn normals(sphere: &SphereModel, gamma: f64) -> (Vec2, Vec2) {
    let (dl, dh) = sphere.slopes(gamma);
    let u = Vec2::polar(gamma);
    let nrm = |d: f64| {
        let t = u * d + u.perp();
        Vec2::new(t.x2, -t.x1) * (1.0 / t.norm())
    };
    (nrm(dl), nrm(dh))
}

/// Largest outward component over the set at x̂ = u(γ), with the maximizing image.
pub fn outward_max(set: &ControlSet, gamma: f64, n_lo: Vec2, n_hi: Vec2) -> (f64, Vec2) {
    let u = Vec2::polar(gamma);
    let r = set.radius();
    let mut best = (f64::NEG_INFINITY, Vec2::default());
    for a in set.generators() {
        let y = a.apply(u);
        for n in [n_lo, n_hi] {
            let v = n.dot(y) + r;
            let other = if n == n_lo { n_hi } else { n_lo };
            let img = y + n * r;
            let val = v.max(other.dot(img));
            if val > best.0 {
                best = (val, img);
            }
        }
    }
    best
}

/// Image of x̂ = u(γ) that attains the outward maximum, i.e. the tangent velocity on the sphere.
pub fn tangent_image(set: &ControlSet, sphere: &SphereModel, gamma: f64) -> Vec2 {
    let (nl, nh) = normals(sphere, gamma);
    outward_max(set, gamma, nl, nh).1
}

pub fn check_barabanov(set: &ControlSet, sphere: &SphereModel, n_samples: usize, tol_out: f64, tol_tan: f64) -> BarabanovCheck {
    let mut rep = BarabanovCheck {
        passed: true,
        samples: n_samples,
        worst_outward: f64::NEG_INFINITY,
        worst_outward_at: 0.0,
        worst_tangent_gap: 0.0,
        worst_tangent_at: 0.0,
        violations: 0,
        tangent_failures: 0,
    };
    for k in 0..n_samples {
        let t = 2.0 * PI * k as f64 / n_samples as f64;
        let (nl, nh) = normals(sphere, t);
        let (v, _) = outward_max(set, t, nl, nh);
        if v > rep.worst_outward {
            rep.worst_outward = v;
            rep.worst_outward_at = t;
        }
        if -v > rep.worst_tangent_gap {
            rep.worst_tangent_gap = -v;
            rep.worst_tangent_at = t;
        }
        if v > tol_out {
            rep.violations += 1;
        }
        if v < -tol_tan {
            rep.tangent_failures += 1;
        }
    }
    rep.passed = rep.violations == 0 && rep.tangent_failures == 0;
    rep
}

#[derive(Debug, Clone)]
pub struct BuildOptions {
    pub tol: f64,
    pub integ: IntegratorOptions,
    pub s_vector: Option<Vec<f64>>,
    pub snap_tol: f64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { tol: 1e-9, integ: IntegratorOptions::default(), s_vector: None, snap_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BudgetInfo {
    pub bounds: Vec<(f64, f64)>,
    pub target: f64,
    pub s: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormResult {
    pub sigma: LyapunovResult,
    pub dominance: DominanceCertificate,
    pub sphere: SphereModel,
    pub uniqueness: UniquenessReport,
    pub budget: Option<BudgetInfo>,
}

/// Sphere of `set` for a given exponent estimate.
pub fn build_norm_at(set: &ControlSet, sigma: LyapunovResult, opts: &BuildOptions) -> Result<NormResult, BuildError> {
    if let DominanceCertificate::Complex { matrix, ellipse } = complex_dominance(set, sigma.sigma) {
        return Ok(NormResult {
            sigma,
            dominance: DominanceCertificate::Complex { matrix, ellipse },
            sphere: SphereModel::ellipse(ellipse),
            uniqueness: UniquenessReport { unique: true, case: UniquenessCase::ComplexDominance },
            budget: None,
        });
    }
    let mut sigma = sigma;
    if set.radius() == 0.0 {
        let sr = real_abscissa(set.generators());
        let scale = set.max_frobenius().max(1.0);
        if (sr - sigma.sigma).abs() <= opts.snap_tol * scale && sr != sigma.sigma {
            info!("real dominance: sigma {} snapped to {sr}", sigma.sigma);
            sigma.sigma = sr;
        }
    }
    let shifted = set.shifted(sigma.sigma);
    let (snapped, degs) = snap_degenerates(&shifted, opts.snap_tol);
    if degs.is_empty() {
        let sphere = periodic_sphere(&snapped, &opts.integ)?;
        return Ok(NormResult {
            sigma,
            dominance: DominanceCertificate::None,
            sphere,
            uniqueness: UniquenessReport { unique: true, case: UniquenessCase::AtMostOneDegenerate },
            budget: None,
        });
    }
    let part = build_partition(&snapped, &degs, &opts.integ)?;
    let ps = part.p_bounds();
    let target = part.target();
    let sphere = assemble_sphere(&part, opts.s_vector.as_deref())?;
    let uniqueness = classify_uniqueness(degs.len(), &ps, target);
    info!("partition: {}", part.tags.iter().map(|t| t.letter()).collect::<String>());
    Ok(NormResult {
        sigma,
        dominance: DominanceCertificate::Real(degs.iter().map(|d| d.matrix).collect()),
        budget: Some(BudgetInfo { bounds: ps, target, s: sphere.s_vector.clone() }),
        sphere,
        uniqueness,
    })
}

/// Full pipeline: exponent by bisection, shift, partition, assembly, classification.
pub fn build_norm(set: &ControlSet, opts: &BuildOptions) -> Result<NormResult, BuildError> {
    let sigma = lyapunov_exponent_with(set, opts.tol, &opts.integ)?;
    match build_norm_at(set, sigma, opts) {
        Err(e @ (BuildError::ClosureViolation(_) | BuildError::BudgetInfeasible { .. })) => {
            warn!("{e}; refining sigma");
            let sigma = lyapunov_exponent_with(set, opts.tol / 10.0, &opts.integ)?;
            build_norm_at(set, sigma, opts)
        }
        other => other,
    }
}
