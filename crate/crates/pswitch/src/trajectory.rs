//! Leading trajectories in polar form: g = ln‖x‖ as a function of the polar angle γ,
//! with dg/dγ = cot φ(γ).

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::control_set::{det_pencil, quadratic_roots, ControlSet, GenTag, LeadingDirection, Side};
use crate::linalg::{eigenvector, kernel_image_unchecked, line_angle, spectrum, Mat2, SpectrumKind, Vec2};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrajectoryError {
    #[error("zero start vector")]
    ZeroVector,
    #[error("start point ({}, {}) is infeasible", .0.x1, .0.x2)]
    Infeasible(Vec2),
    #[error("integrator failed to converge near gamma = {0}")]
    NonConvergence(f64),
}

#[derive(Debug, Clone, Copy)]
pub struct IntegratorOptions {
    /// Absolute error per unit of γ.
    pub atol: f64,
    pub max_step: f64,
    pub phi_asym: f64,
    pub stall_steps: usize,
    pub min_step: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            atol: 1e-10,
            max_step: PI / 720.0,
            phi_asym: 1e-6,
            stall_steps: 32,
            min_step: 1e-13,
        }
    }
}

impl IntegratorOptions {
    pub fn scaled(&self, factor: f64) -> Self {
        IntegratorOptions { atol: self.atol * factor, ..*self }
    }
}

/// Curve node with one-sided slopes of g (lower-γ side and upper-γ side).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub gamma: f64,
    pub g: f64,
    pub d_lo: f64,
    pub d_hi: f64,
}

/// Cubic Hermite value on [a, b] at t.
pub fn hermite(a: &Node, b: &Node, t: f64) -> f64 {
    let h = b.gamma - a.gamma;
    if h == 0.0 {
        return a.g;
    }
    let s = (t - a.gamma) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    let (da, db) = (a.d_hi, b.d_lo);
    let (da, db) = (if da.is_finite() { da } else { 0.0 }, if db.is_finite() { db } else { 0.0 });
    h00 * a.g + h10 * h * da + h01 * b.g + h11 * h * db
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RateEnd {
    Reached { delta: f64 },
    Stopped { at: f64 },
    /// Rate blows up at `at`; `sign` is the sign of the limit of Δg.
    Diverged { at: f64, sign: f64 },
}

/// ∫ f_side over [from, to] in processing order, with sampled nodes (g relative to `from`).
#[derive(Debug, Clone, PartialEq)]
pub struct RateIntegral {
    pub nodes: Vec<Node>,
    pub switch_log: Vec<(f64, GenTag)>,
    pub end: RateEnd,
    pub error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RoundOutcome {
    Round { lambda: f64 },
    Stopped { at: f64 },
    Asymptotic { direction: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolarTrajectory {
    pub side: Side,
    /// Ordered by travel (γ increasing for left, decreasing for right).
    pub samples: Vec<Node>,
    pub switch_log: Vec<(f64, GenTag)>,
    pub error_estimate: f64,
}

impl PolarTrajectory {
    pub fn start_gamma(&self) -> f64 {
        self.samples[0].gamma
    }

    pub fn end_gamma(&self) -> f64 {
        self.samples[self.samples.len() - 1].gamma
    }

    /// Interpolated g at an angle inside the traversed range.
    pub fn g_at(&self, gamma: f64) -> Option<f64> {
        let mut s: Vec<&Node> = self.samples.iter().collect();
        if self.side == Side::Right {
            s.reverse();
        }
        interp_nodes_ref(&s, gamma)
    }

    pub fn generator_at(&self, gamma: f64) -> Option<GenTag> {
        let mut cur = None;
        for (g, t) in &self.switch_log {
            let passed = match self.side {
                Side::Left => *g <= gamma,
                Side::Right => *g >= gamma,
            };
            if passed {
                cur = Some(*t);
            }
        }
        cur
    }

    /// CSV with columns gamma,g,generator.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("gamma,g,generator\n");
        for s in &self.samples {
            let tag = self.generator_at(s.gamma).map(|t| t.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{:.12},{:.12},{}", s.gamma, s.g, tag);
        }
        out
    }
}

fn interp_nodes_ref(s: &[&Node], gamma: f64) -> Option<f64> {
    if s.is_empty() {
        return None;
    }
    let lo = s[0].gamma;
    let hi = s[s.len() - 1].gamma;
    let eps = 1e-12 * (1.0 + hi.abs());
    if gamma < lo - eps || gamma > hi + eps {
        return None;
    }
    if s.len() == 1 {
        return Some(s[0].g);
    }
    let k = s.partition_point(|n| n.gamma <= gamma);
    let k = k.clamp(1, s.len() - 1);
    Some(hermite(s[k - 1], s[k], gamma))
}

/// Cubic Hermite interpolation over nodes sorted by increasing γ.
pub fn interp_nodes(s: &[Node], gamma: f64) -> Option<f64> {
    let r: Vec<&Node> = s.iter().collect();
    interp_nodes_ref(&r, gamma)
}

/// Polar rate dot(u, Au)/cross(u, Au) of a fixed matrix.
pub fn matrix_rate(a: &Mat2, gamma: f64) -> f64 {
    let u = Vec2::polar(gamma);
    let v = a.apply(u);
    u.dot(v) / u.cross(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchingPoint {
    pub i: usize,
    pub j: usize,
    /// Root of det(Aᵢ − λAⱼ) = 0; +∞ encodes Aⱼx = 0.
    pub lambda: f64,
    pub point: Vec2,
}

/// Nonnegative roots of det(Aᵢ − λAⱼ) = 0 over pairs i < j, with their null directions.
pub fn switching_points_finite(gens: &[Mat2]) -> Vec<SwitchingPoint> {
    let mut out = Vec::new();
    for i in 0..gens.len() {
        for j in (i + 1)..gens.len() {
            let (a, b) = (gens[i], gens[j]);
            let (c0, c1, c2) = det_pencil(&a, &(-b));
            let scale = a.frobenius().max(b.frobenius()).powi(2).max(1e-300);
            if c0.abs().max(c1.abs()).max(c2.abs()) <= 1e-12 * scale {
                log::warn!("generators {i} and {j} are proportional; pencil is identically degenerate");
                continue;
            }
            for lam in quadratic_roots(c0, c1, c2) {
                if lam < 0.0 {
                    continue;
                }
                let m = a - b * lam;
                if m.frobenius() <= 1e-12 * scale.sqrt() {
                    continue;
                }
                let (k, _) = kernel_image_unchecked(&m);
                out.push(SwitchingPoint { i, j, lambda: lam, point: k });
            }
            if b.is_degenerate() {
                let (k, _) = kernel_image_unchecked(&b);
                out.push(SwitchingPoint { i, j, lambda: f64::INFINITY, point: k });
            }
        }
    }
    out
}

/// Line angles in [0, π) where the leading generator of a finite set can change.
pub fn breakpoints(gens: &[Mat2]) -> Vec<f64> {
    let mut b: Vec<f64> = switching_points_finite(gens).iter().map(|p| line_angle(p.point)).collect();
    for m in gens {
        if let SpectrumKind::RealPair { l1, l2 } = spectrum(m).kind {
            b.push(line_angle(eigenvector(m, l1)));
            b.push(line_angle(eigenvector(m, l2)));
        }
    }
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut out: Vec<f64> = Vec::new();
    for t in b {
        if out.last().map_or(true, |l| t - *l > 1e-13) {
            out.push(t);
        }
    }
    if out.len() > 1 && out[0] + PI - out[out.len() - 1] <= 1e-13 {
        out.pop();
    }
    out
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss–Kronrod quadrature (interior nodes only).
pub fn adaptive_gk(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    const MAX_PIECES: usize = 400;
    let (v, e) = gk15(f, a, b);
    let mut pieces = vec![(a, b, v, e)];
    let (mut total, mut err) = (v, e);
    while err > tol.max(1e-15 * total.abs()) && pieces.len() < MAX_PIECES {
        let (k, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.partial_cmp(&y.1 .3).unwrap_or(std::cmp::Ordering::Equal))
            .unwrap();
        let (lo, hi, v, e) = pieces.swap_remove(k);
        if (hi - lo).abs() < 1e-14 {
            pieces.push((lo, hi, v, 0.0));
            err -= e;
            continue;
        }
        let m = 0.5 * (lo + hi);
        let (v1, e1) = gk15(f, lo, m);
        let (v2, e2) = gk15(f, m, hi);
        total += v1 + v2 - v;
        err += e1 + e2 - e;
        pieces.push((lo, m, v1, e1));
        pieces.push((m, hi, v2, e2));
    }
    (total, err.max(0.0))
}

fn leading_tag(set: &ControlSet, gamma: f64, side: Side) -> Option<(Mat2, GenTag)> {
    match set.leading_unchecked(Vec2::polar(gamma), side) {
        LeadingDirection::Defined { matrix, generator, .. } => Some((matrix, generator)),
        LeadingDirection::Undefined => None,
    }
}

/// Signed pole test: Some(eigenvalue sign) if u(γ) is an eigenvector of `a` with nonzero eigenvalue.
fn pole_at(a: &Mat2, gamma: f64) -> Option<f64> {
    let u = Vec2::polar(gamma);
    let v = a.apply(u);
    let nv = v.norm();
    if nv <= 1e-9 * a.frobenius() {
        return None;
    }
    if u.cross(v).abs() <= 1e-10 * nv {
        Some(u.dot(v).signum())
    } else {
        None
    }
}

/// ∫_from^to f_side(γ) dγ for the leading field of `set`.
pub fn integrate_rate(
    set: &ControlSet,
    side: Side,
    from: f64,
    to: f64,
    opts: &IntegratorOptions,
) -> Result<RateIntegral, TrajectoryError> {
    if set.radius() == 0.0 {
        Ok(integrate_finite(set, side, from, to, opts))
    } else {
        integrate_smooth(set, side, from, to, opts)
    }
}

fn integrate_finite(set: &ControlSet, side: Side, from: f64, to: f64, opts: &IntegratorOptions) -> RateIntegral {
    let dir = if to >= from { 1.0 } else { -1.0 };
    let (lo, hi) = if dir > 0.0 { (from, to) } else { (to, from) };
    let bps = breakpoints(set.generators());
    let mut cuts = vec![lo];
    if !bps.is_empty() {
        let k0 = ((lo - bps[bps.len() - 1]) / PI).floor() as i64;
        let mut k = k0;
        'outer: loop {
            for b in &bps {
                let t = b + k as f64 * PI;
                if t >= hi - 1e-14 {
                    break 'outer;
                }
                if t > lo + 1e-14 {
                    cuts.push(t);
                }
            }
            k += 1;
        }
    }
    cuts.push(hi);
    if dir < 0.0 {
        cuts.reverse();
    }
    let mut nodes = Vec::new();
    let mut log: Vec<(f64, GenTag)> = Vec::new();
    let mut g = 0.0;
    let mut err = 0.0;
    let mut last_tag: Option<GenTag> = None;
    let quad_tol = opts.atol * 1e-3;
    for w in cuts.windows(2) {
        let (s, e) = (w[0], w[1]);
        if (e - s).abs() == 0.0 {
            continue;
        }
        let Some((a, tag)) = leading_tag(set, 0.5 * (s + e), side) else {
            push_start(&mut nodes, s, g, f64::NAN);
            return finish(nodes, log, RateEnd::Stopped { at: s }, err);
        };
        if last_tag != Some(tag) {
            log.push((s, tag));
            last_tag = Some(tag);
        }
        if let Some(mu) = pole_at(&a, s) {
            push_start(&mut nodes, s, g, f64::NAN);
            let end = RateEnd::Diverged { at: s, sign: mu * dir * side.sign() };
            return finish(nodes, log, end, err);
        }
        let pole_end = pole_at(&a, e);
        let f = |t: f64| matrix_rate(&a, t);
        let nudge = 1e-9 * (e - s);
        let f_s = f(s + nudge);
        push_start(&mut nodes, s, g, f_s);
        let pieces = (((e - s).abs() / opts.max_step).ceil() as usize).max(1);
        let step = (e - s) / pieces as f64;
        let mut knots: Vec<f64> = (1..pieces).map(|k| s + k as f64 * step).collect();
        if pole_end.is_some() {
            // approach the pole geometrically; the integral diverges there
            let last = knots.last().copied().unwrap_or(s);
            knots.extend((1..=40).map(|k| e - (e - last) * 0.5f64.powi(k)));
        } else {
            knots.push(e);
        }
        let mut prev = s;
        let mut f_prev = f_s;
        for (k, &a1) in knots.iter().enumerate() {
            let last = pole_end.is_none() && k + 1 == knots.len();
            let f_end = if last { f(e - nudge) } else { f(a1) };
            let mut segs = Vec::new();
            refine_piece(&f, prev, a1, f_prev, f_end, quad_tol, 0, &mut segs);
            for (t, v, ee, ft) in segs {
                g += v;
                err += ee;
                if last && t == a1 {
                    let (lo_d, hi_d) = if dir > 0.0 { (ft, f64::NAN) } else { (f64::NAN, ft) };
                    nodes.push(Node { gamma: t, g, d_lo: lo_d, d_hi: hi_d });
                } else {
                    nodes.push(Node { gamma: t, g, d_lo: ft, d_hi: ft });
                }
            }
            prev = a1;
            f_prev = f_end;
        }
        if let Some(mu) = pole_end {
            let end = RateEnd::Diverged { at: e, sign: mu * dir * side.sign() };
            return finish(nodes, log, end, err);
        }
    }
    finish(nodes, log, RateEnd::Reached { delta: g }, err)
}

/// Integrates f over [p, q] (either orientation), splitting until the cubic Hermite slope
/// at the midpoint matches f; pushes (end, ∫, error, f(end)) per accepted piece.
#[allow(clippy::too_many_arguments)]
fn refine_piece(
    f: &dyn Fn(f64) -> f64,
    p: f64,
    q: f64,
    fp: f64,
    fq: f64,
    quad_tol: f64,
    depth: usize,
    out: &mut Vec<(f64, f64, f64, f64)>,
) {
    let h = q - p;
    let (v, ee) = adaptive_gk(f, p.min(q), p.max(q), quad_tol * h.abs());
    let integral = v * h.signum();
    let m = 0.5 * (p + q);
    let fm = f(m);
    let herm = 1.5 * integral / h - 0.25 * (fp + fq);
    if depth < 24 && h.abs() > 1e-9 && (herm - fm).abs() > 1e-7 * (1.0 + fm * fm) {
        refine_piece(f, p, m, fp, fm, quad_tol, depth + 1, out);
        refine_piece(f, m, q, fm, fq, quad_tol, depth + 1, out);
    } else {
        out.push((q, integral, ee, fq));
    }
}

/// Fills missing one-sided slopes from the opposite side.
fn finish(mut nodes: Vec<Node>, log: Vec<(f64, GenTag)>, end: RateEnd, error: f64) -> RateIntegral {
    for n in nodes.iter_mut() {
        if n.d_lo.is_nan() {
            n.d_lo = n.d_hi;
        }
        if n.d_hi.is_nan() {
            n.d_hi = n.d_lo;
        }
    }
    RateIntegral { nodes, switch_log: log, end, error }
}


/// Record the outgoing slope at an arc start, merging with an existing end node.
fn push_start(nodes: &mut Vec<Node>, s: f64, g: f64, d_out: f64) {
    if let Some(last) = nodes.last_mut() {
        if last.gamma == s {
            if last.d_hi.is_nan() {
                last.d_hi = d_out;
            } else if last.d_lo.is_nan() {
                last.d_lo = d_out;
            }
            return;
        }
    }
    nodes.push(Node { gamma: s, g, d_lo: d_out, d_hi: d_out });
}

// Dormand–Prince 5(4) tableau for the pure quadrature y' = f(γ).
const DP_C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const DP_B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const DP_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn rate_and_sin(set: &ControlSet, gamma: f64, side: Side) -> Option<(f64, f64, GenTag)> {
    match set.leading_unchecked(Vec2::polar(gamma), side) {
        LeadingDirection::Defined { angle_to_x, generator, .. } => {
            let (s, c) = angle_to_x.sin_cos();
            Some((c / s, s, generator))
        }
        LeadingDirection::Undefined => None,
    }
}

fn integrate_smooth(
    set: &ControlSet,
    side: Side,
    from: f64,
    to: f64,
    opts: &IntegratorOptions,
) -> Result<RateIntegral, TrajectoryError> {
    let dir = if to >= from { 1.0 } else { -1.0 };
    let total = (to - from).abs();
    let mut gamma = from;
    let mut g = 0.0;
    let mut err = 0.0;
    let mut nodes = Vec::new();
    let mut log = Vec::new();
    let Some((f0, s0, tag0)) = rate_and_sin(set, from, side) else {
        nodes.push(Node { gamma: from, g, d_lo: f64::NAN, d_hi: f64::NAN });
        return Ok(RateIntegral { nodes, switch_log: log, end: RateEnd::Stopped { at: from }, error: 0.0 });
    };
    nodes.push(Node { gamma: from, g, d_lo: f0, d_hi: f0 });
    log.push((from, tag0));
    let mut last_tag = tag0;
    let mut stall = if s0.abs() < opts.phi_asym { 1 } else { 0 };
    let mut h = opts.max_step.min(total);
    let mut progress = 0.0;
    let mut steps = 0usize;
    while progress < total {
        steps += 1;
        if steps > 2_000_000 {
            return Err(TrajectoryError::NonConvergence(gamma));
        }
        h = h.min(total - progress).min(opts.max_step);
        let mut fs = [0.0; 7];
        let mut undefined = false;
        let mut fmax: f64 = 0.0;
        for i in 0..7 {
            match rate_and_sin(set, gamma + dir * DP_C[i] * h, side) {
                Some((f, _, _)) if f.is_finite() => {
                    fs[i] = f;
                    fmax = fmax.max(f.abs());
                }
                _ => {
                    undefined = true;
                    break;
                }
            }
        }
        if undefined {
            if h <= opts.min_step * (1.0 + gamma.abs()) {
                return Ok(RateIntegral { nodes, switch_log: log, end: RateEnd::Stopped { at: gamma }, error: err });
            }
            h *= 0.25;
            continue;
        }
        let inc: f64 = h * DP_B.iter().zip(fs.iter()).map(|(b, f)| b * f).sum::<f64>();
        let est: f64 = (h * DP_E.iter().zip(fs.iter()).map(|(b, f)| b * f).sum::<f64>()).abs();
        let tol = opts.atol * h * fmax.max(1.0);
        if est > tol && h > opts.min_step * (1.0 + gamma.abs()) {
            let fac = (0.9 * (tol / est).powf(0.2)).clamp(0.1, 0.5);
            h *= fac;
            continue;
        }
        if est > tol {
            let sign = if fs[6] >= 0.0 { 1.0 } else { -1.0 };
            let near_pole = fs[6].abs() > 1e3;
            if near_pole || stall > 0 {
                return Ok(RateIntegral {
                    nodes,
                    switch_log: log,
                    end: RateEnd::Diverged { at: gamma, sign: sign * dir },
                    error: err,
                });
            }
            return Err(TrajectoryError::NonConvergence(gamma));
        }
        gamma += dir * h;
        progress += h;
        if progress >= total - 1e-15 {
            gamma = to;
            progress = total;
        }
        g += dir * inc;
        err += est;
        let (f_end, s_end, tag) = rate_and_sin(set, gamma, side).unwrap_or((fs[6], 1.0, last_tag));
        nodes.push(Node { gamma, g, d_lo: f_end, d_hi: f_end });
        if tag != last_tag {
            log.push((gamma, tag));
            last_tag = tag;
        }
        if s_end.abs() < opts.phi_asym {
            stall += 1;
            if stall >= opts.stall_steps {
                let sign = if f_end >= 0.0 { 1.0 } else { -1.0 };
                return Ok(RateIntegral {
                    nodes,
                    switch_log: log,
                    end: RateEnd::Diverged { at: gamma, sign: sign * dir },
                    error: err,
                });
            }
        } else {
            stall = 0;
        }
        let fac = if est == 0.0 { 5.0 } else { (0.9 * (tol / est).powf(0.2)).clamp(0.2, 5.0) };
        h *= fac;
    }
    Ok(RateIntegral { nodes, switch_log: log, end: RateEnd::Reached { delta: g }, error: err })
}

/// Integrates the leading trajectory from `start` over an angular span (≤ π).
pub fn integrate_leading(
    set: &ControlSet,
    start: Vec2,
    side: Side,
    span: f64,
    opts: &IntegratorOptions,
) -> Result<(PolarTrajectory, RoundOutcome), TrajectoryError> {
    if start.norm() == 0.0 || !start.is_finite() {
        return Err(TrajectoryError::ZeroVector);
    }
    match set.is_feasible(start) {
        Ok(true) => {}
        _ => return Err(TrajectoryError::Infeasible(start)),
    }
    let g0 = start.norm().ln();
    let gamma0 = start.arg();
    let target = gamma0 + side.sign() * span.min(PI);
    let ri = integrate_rate(set, side, gamma0, target, opts)?;
    let samples: Vec<Node> = ri.nodes.iter().map(|n| Node { g: n.g + g0, ..*n }).collect();
    let outcome = match ri.end {
        RateEnd::Reached { delta } => RoundOutcome::Round { lambda: delta.exp() },
        RateEnd::Stopped { at } => RoundOutcome::Stopped { at },
        RateEnd::Diverged { at, .. } => RoundOutcome::Asymptotic { direction: at },
    };
    Ok((PolarTrajectory { side, samples, switch_log: ri.switch_log, error_estimate: ri.error }, outcome))
}
