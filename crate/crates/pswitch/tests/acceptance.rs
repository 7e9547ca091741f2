//! Acceptance criteria 1–11, one PASS/FAIL line each.

mod common;

use std::f64::consts::PI;
use std::io::Write;
use std::time::Instant;

use common::*;
use pswitch::applications::{critical_radius, polygon_to_system, SymmetricPolygon};
use pswitch::barabanov::{
    build_norm, build_norm_at, check_barabanov, max_radial_gap, BuildOptions, IntervalKind, NormResult, SphereKind,
};
use pswitch::stability::{decide_stability, lyapunov_exponent};
use pswitch::trajectory::{integrate_leading, RoundOutcome};
use pswitch::{ControlSet, Mat2, Side, Vec2};
use rand::Rng;

type Outcome = (bool, String);

fn c1_c4() -> (Outcome, Outcome) {
    let t = Instant::now();
    let r = critical_radius(A0, 1e-4).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let ok1 = (r.radius - 0.3475).abs() <= 1e-3 && secs < 60.0;
    (
        (ok1, format!("R = {:.6} after {} iterations in {secs:.2}s", r.radius, r.iterations)),
        (r.radius < 0.35, format!("R = {:.6} < 0.35", r.radius)),
    )
}

fn c2() -> Outcome {
    let mut ok = true;
    let mut msg = String::new();
    for (r, want) in [(0.1, true), (0.4, false)] {
        let t = Instant::now();
        let v = decide_stability(&ControlSet::frobenius_ball(A0, r).unwrap()).unwrap();
        let secs = t.elapsed().as_secs_f64();
        ok &= v.stable == want && secs < 10.0;
        msg += &format!("r={r}: stable={} ({secs:.3}s) ", v.stable);
    }
    (ok, msg)
}

fn c3() -> Outcome {
    let r = lyapunov_exponent(&ControlSet::finite(vec![A0]).unwrap(), 1e-6).unwrap();
    ((r.sigma + 0.35).abs() <= 1e-6, format!("sigma = {:.9}", r.sigma))
}

fn c5() -> Outcome {
    let mut g = rng(5);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let s = random_pair(&mut g);
        let alpha: f64 = g.gen_range(-1.0..1.0);
        let a = lyapunov_exponent(&s, 1e-7).unwrap().sigma;
        let b = lyapunov_exponent(&s.shifted(alpha), 1e-7).unwrap().sigma;
        worst = worst.max((b - (a - alpha)).abs());
    }
    (worst <= 2e-6, format!("max shift-identity defect {worst:.3e} over 50 sets"))
}

fn round_lambda(set: &ControlSet) -> Option<f64> {
    let mut best: Option<f64> = None;
    for side in [Side::Left, Side::Right] {
        if let Ok((_, RoundOutcome::Round { lambda })) = integrate_leading(set, Vec2::new(1.0, 0.0), side, PI, &Default::default()) {
            if best.map_or(true, |b| (lambda - 1.0).abs() < (b - 1.0).abs()) {
                best = Some(lambda);
            }
        }
    }
    best
}

fn c6() -> Outcome {
    let mut g = rng(6);
    let (mut found, mut worst_l, mut fails) = (0, 0.0f64, 0);
    while found < 20 {
        let s = random_pair(&mut g);
        let sig = lyapunov_exponent(&s, 1e-10).unwrap();
        let sh = s.shifted(sig.sigma);
        // real dominance shows up as a degenerate hull member slightly below sigma
        if !s.shifted(sig.sigma - 1e-6).degenerate_in_hull().is_empty() {
            continue;
        }
        found += 1;
        let lam = round_lambda(&sh).unwrap_or(f64::NAN);
        worst_l = worst_l.max((lam - 1.0).abs());
        let norm = build_norm_at(&s, sig, &BuildOptions::default()).unwrap();
        if !check_barabanov(&sh, &norm.sphere, 2048, 1e-5, 1e-4).passed {
            fails += 1;
        }
    }
    (worst_l <= 1e-6 && fails == 0, format!("max |lambda - 1| = {worst_l:.3e}, checker failures {fails}/20"))
}

fn c7() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut kinds = true;
    for beta in [0.5, 1.0, 2.0, 3.0] {
        let s = ControlSet::finite(vec![Mat2::new(0.0, -beta * beta, 1.0, 0.0)]).unwrap();
        let norm = build_norm(&s, &BuildOptions::default()).unwrap();
        kinds &= norm.sphere.kind == SphereKind::Ellipse;
        let exact = |t: f64| 1.0 / (t.cos().powi(2) + beta * beta * t.sin().powi(2)).sqrt();
        worst = worst.max(profile_gap(&|t| norm.sphere.radius(t), &exact, 4096));
    }
    (kinds && worst <= 1e-6, format!("max radial error vs x1^2 + b^2 x2^2 = const: {worst:.3e}"))
}

/// s-vector that reproduces `target` on the P intervals of a built norm.
fn matching_s(norm: &NormResult, target: &pswitch::barabanov::SphereModel) -> Vec<f64> {
    norm.sphere
        .partition
        .iter()
        .filter(|t| matches!(t.kind, IntervalKind::P { .. }))
        .map(|t| target.g(t.span.1) - target.g(t.span.0))
        .collect()
}

fn c8() -> Outcome {
    let mut ok = true;
    let mut msg = String::new();
    for (name, v) in [("square", square()), ("rectangle", rectangle()), ("hexagon", hexagon())] {
        let poly = SymmetricPolygon::new(v).unwrap();
        let set = polygon_to_system(&poly).unwrap();
        let sig = lyapunov_exponent(&set, 1e-9).unwrap();
        let target = poly.sphere();
        let chk = check_barabanov(&set, &target, 2048, 1e-5, 1e-4);
        let first = build_norm_at(&set, sig, &BuildOptions::default()).unwrap();
        let opts = BuildOptions { s_vector: Some(matching_s(&first, &target)), ..Default::default() };
        let rebuilt = build_norm_at(&set, sig, &opts).unwrap();
        let gap = max_radial_gap(&rebuilt.sphere, &target, 4096);
        let pass = sig.sigma.abs() <= 1e-6 && chk.passed && gap <= 1e-3;
        ok &= pass;
        msg += &format!("{name}: sigma={:.1e} check={} gap={gap:.1e}; ", sig.sigma, chk.passed);
    }
    (ok, msg)
}

fn c9() -> Outcome {
    let mut balls_unique = true;
    let mut g = rng(9);
    let mut centers = vec![(A0, 0.1), (A0, 0.2), (A0, 0.348004)];
    while centers.len() < 8 {
        let c = random_mat(&mut g);
        if pswitch::linalg::spectrum(&c).abscissa < -0.05 {
            centers.push((c, g.gen_range(0.0..0.3)));
        }
    }
    for (c, r) in &centers {
        match ControlSet::frobenius_ball(*c, *r).map(|s| build_norm(&s, &BuildOptions::default())) {
            Ok(Ok(n)) => balls_unique &= n.uniqueness.unique,
            _ => balls_unique = false,
        }
    }
    let set = two_pencil_system();
    let l = 2f64.sqrt().ln();
    let build = |s: Vec<f64>| build_norm(&set, &BuildOptions { s_vector: Some(s), ..Default::default() }).unwrap();
    let (a, b) = (build(vec![-l, l]), build(vec![0.0, 0.0]));
    let many = !a.uniqueness.unique;
    let sh = set.shifted(a.sigma.sigma);
    let gap = max_radial_gap(&a.sphere, &b.sphere, 4096);
    let checks = check_barabanov(&sh, &a.sphere, 2048, 1e-5, 1e-4).passed && check_barabanov(&sh, &b.sphere, 2048, 1e-5, 1e-4).passed;
    (
        balls_unique && many && gap > 1e-3 && checks,
        format!("balls unique: {balls_unique}; two-pencil case {:?}, gap {gap:.3e}, both checked: {checks}", a.uniqueness.case),
    )
}

fn c10() -> Outcome {
    let mut worst: f64 = 1.0;
    let mut count = 0;
    let mut g = rng(10);
    let mut cases: Vec<ControlSet> = vec![ControlSet::frobenius_ball(A0, 0.348004).unwrap(), two_pencil_system()];
    for _ in 0..4 {
        cases.push(random_pair(&mut g));
    }
    for set in &cases {
        let n = build_norm(set, &BuildOptions::default()).unwrap();
        let sh = set.shifted(n.sigma.sigma);
        let (frac, used) = slope_agreement(&sh, &n.sphere, 2048, 1e-4);
        if used > 0 {
            worst = worst.min(frac);
            count += 1;
        }
    }
    (worst >= 0.95, format!("worst agreement fraction {worst:.4} over {count} spheres"))
}

fn c11() -> Outcome {
    let mut g = rng(11);
    let (mut found, mut worst, mut tried) = (0, 0.0f64, 0);
    while found < 10 && tried < 200 {
        tried += 1;
        let s = random_pair(&mut g);
        let Ok(n) = build_norm(&s, &BuildOptions::default()) else { continue };
        if !n.uniqueness.unique {
            continue;
        }
        found += 1;
        let oracle = PolarOracle::run(s.generators(), n.sigma.sigma, 4096, 2e-2, 40_000);
        worst = worst.max(profile_gap(&|t| n.sphere.radius(t), &|t| oracle.radius(t), 2048));
    }
    (found == 10 && worst <= 1e-3, format!("max radial gap to the value-iteration oracle {worst:.3e} over {found} systems"))
}

#[test]
fn acceptance() {
    let (o1, o4) = c1_c4();
    let results: Vec<(usize, Outcome)> = vec![
        (1, o1),
        (2, c2()),
        (3, c3()),
        (4, o4),
        (5, c5()),
        (6, c6()),
        (7, c7()),
        (8, c8()),
        (9, c9()),
        (10, c10()),
        (11, c11()),
    ];
    let mut failed = Vec::new();
    for (k, (ok, msg)) in &results {
        // straight to the handle so the lines survive output capture
        let _ = writeln!(std::io::stderr(), "criterion {k:>2}: {} {msg}", if *ok { "PASS" } else { "FAIL" });
        if !ok {
            failed.push(*k);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
