#![allow(dead_code)]

use std::f64::consts::PI;

use pswitch::barabanov::{tangent_image, SphereModel};
use pswitch::{ControlSet, Mat2, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const A0: Mat2 = Mat2 { a11: -0.2, a12: -1.0, a21: 1.0, a22: -0.5 };

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_mat(r: &mut ChaCha8Rng) -> Mat2 {
    Mat2::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))
}

/// Irreducible two-matrix finite set.
pub fn random_pair(r: &mut ChaCha8Rng) -> ControlSet {
    loop {
        if let Ok(s) = ControlSet::finite(vec![random_mat(r), random_mat(r)]) {
            return s;
        }
    }
}

pub fn square() -> Vec<Vec2> {
    vec![Vec2::new(1.0, -1.0), Vec2::new(1.0, 1.0), Vec2::new(-1.0, 1.0), Vec2::new(-1.0, -1.0)]
}

pub fn rectangle() -> Vec<Vec2> {
    vec![Vec2::new(2.0, -1.0), Vec2::new(2.0, 1.0), Vec2::new(-2.0, 1.0), Vec2::new(-2.0, -1.0)]
}

pub fn hexagon() -> Vec<Vec2> {
    (0..6).map(|k| Vec2::new((k as f64 * PI / 3.0).cos(), (k as f64 * PI / 3.0).sin())).collect()
}

/// The four-matrix system with two reverse pencils and slack in the budget.
pub fn two_pencil_system() -> ControlSet {
    ControlSet::finite_allow_reducible(vec![
        Mat2::new(0.0, 0.0, 0.0, -1.0),
        Mat2::new(-1.0, 0.0, 0.0, 0.0),
        Mat2::new(0.0, 0.0, 1.0, -1.0),
        Mat2::new(0.0, 0.0, -1.0, -1.0),
    ])
    .unwrap()
}

fn expm_series(a: &Mat2) -> Mat2 {
    let mut term = Mat2::identity();
    let mut sum = Mat2::identity();
    for k in 1..30 {
        term = term * *a * (1.0 / k as f64);
        sum = sum + term;
    }
    sum
}

/// Dense value iteration ν ← max_i ν∘exp((A_i − σ)τ) on an n-angle grid, with the
/// unit sphere stored as radii and evaluated through its chords. Runs in coordinates
/// y = T x where T whitens a coarse first pass, so thin bodies are resolved evenly.
/// Every k steps the image is averaged with the previous iterate in ln r, with k
/// running through golden-ratio fractions of a turn of the fastest rotating generator.
pub struct PolarOracle {
    pub radii: Vec<f64>,
    pub t: Mat2,
}

fn iterate(steps: &[Mat2], n: usize, max_iter: usize, turn: f64) -> Vec<f64> {
    let dirs: Vec<Vec2> = (0..n).map(|j| Vec2::polar(2.0 * PI * j as f64 / n as f64)).collect();
    let mut cur = PolarOracle { radii: vec![1.0; n], t: Mat2::identity() };
    let mut used = 0;
    for j in 1.. {
        let k = ((j as f64 * 0.618_033_988_749_895).fract() * turn).round().max(1.0) as usize;
        used += k;
        if used > max_iter {
            break;
        }
        let mut img = PolarOracle { radii: cur.radii.clone(), t: Mat2::identity() };
        for _ in 0..k {
            let r: Vec<f64> = dirs.iter().map(|u| 1.0 / steps.iter().map(|e| img.nu(e.apply(*u))).fold(0.0, f64::max)).collect();
            img.radii = r;
        }
        let mut next: Vec<f64> = cur.radii.iter().zip(&img.radii).map(|(a, b)| (a * b).sqrt()).collect();
        let mean = next.iter().map(|r| r.ln()).sum::<f64>() / n as f64;
        next.iter_mut().for_each(|r| *r /= mean.exp());
        let change = next.iter().zip(&cur.radii).map(|(a, b)| (a / b - 1.0).abs()).fold(0.0, f64::max);
        cur.radii = next;
        if change < 1e-13 {
            break;
        }
    }
    cur.radii
}

impl PolarOracle {
    pub fn run(gens: &[Mat2], sigma: f64, n: usize, tau: f64, max_iter: usize) -> Self {
        let steps: Vec<Mat2> = gens.iter().map(|a| expm_series(&(a.shift(sigma) * tau))).collect();
        let omega = gens.iter().map(|a| (-(a.trace() * a.trace() / 4.0 - a.det())).max(0.0).sqrt()).fold(0.0, f64::max);
        let turn = if omega > 0.0 { (2.0 * PI / (omega * tau)).min(max_iter as f64 / 50.0) } else { 1.0 };
        let mut cur = PolarOracle { radii: iterate(&steps, 512, max_iter, turn), t: Mat2::identity() };
        for size in [1024, n] {
            // second moment of the current sphere, then T ← S^(-1/2)
            let mut s = Mat2::zero();
            for k in 0..size {
                let p = Vec2::polar(2.0 * PI * k as f64 / size as f64) * cur.radius(2.0 * PI * k as f64 / size as f64);
                s = s + p.outer(p) * (1.0 / size as f64);
            }
            let d = s.det().sqrt();
            let root = Mat2::new(s.a11 + d, s.a12, s.a21, s.a22 + d) * (1.0 / (s.trace() + 2.0 * d).sqrt());
            let t = root.inverse().unwrap();
            let wsteps: Vec<Mat2> = steps.iter().map(|e| t * *e * root).collect();
            cur = PolarOracle { radii: iterate(&wsteps, size, max_iter, turn), t };
        }
        cur
    }

    fn chord_radius(&self, theta: f64) -> f64 {
        let n = self.radii.len();
        let h = 2.0 * PI / n as f64;
        let t = theta.rem_euclid(2.0 * PI);
        let k = ((t / h) as usize).min(n - 1);
        let p = Vec2::polar(k as f64 * h) * self.radii[k];
        let q = Vec2::polar((k + 1) as f64 * h) * self.radii[(k + 1) % n];
        let d = q - p;
        p.cross(d) / Vec2::polar(t).cross(d)
    }

    /// Norm in whitened coordinates.
    fn nu(&self, y: Vec2) -> f64 {
        y.norm() / self.chord_radius(y.x2.atan2(y.x1))
    }

    /// Radius of the unit sphere in original coordinates.
    pub fn radius(&self, theta: f64) -> f64 {
        let y = self.t.apply(Vec2::polar(theta));
        1.0 / self.nu(y)
    }
}

/// Max relative radial gap between two radius profiles after removing the mean of ln r.
pub fn profile_gap(a: &dyn Fn(f64) -> f64, b: &dyn Fn(f64) -> f64, n: usize) -> f64 {
    let ga: Vec<f64> = (0..n).map(|k| a(2.0 * PI * k as f64 / n as f64).ln()).collect();
    let gb: Vec<f64> = (0..n).map(|k| b(2.0 * PI * k as f64 / n as f64).ln()).collect();
    let ma = ga.iter().sum::<f64>() / n as f64;
    let mb = gb.iter().sum::<f64>() / n as f64;
    ga.iter().zip(&gb).map(|(x, y)| ((x - ma) - (y - mb)).exp() - 1.0).map(f64::abs).fold(0.0, f64::max)
}

/// Fraction of smooth sample points where the centered difference of g matches cot φ of
/// the tangent image; returns (fraction, samples used).
pub fn slope_agreement(set: &ControlSet, sphere: &SphereModel, n: usize, step: f64) -> (f64, usize) {
    let corners: Vec<f64> = sphere.corners(1e-6);
    let near_corner = |t: f64| {
        corners.iter().any(|c| {
            let d = (t - c).rem_euclid(PI);
            d.min(PI - d) < 4.0 * step
        })
    };
    let tol = 1e-4f64.max(10.0 * step * step);
    let (mut ok, mut used) = (0usize, 0usize);
    for k in 0..n {
        let t = 2.0 * PI * (k as f64 + 0.5) / n as f64;
        if near_corner(t) {
            continue;
        }
        let y = tangent_image(set, sphere, t);
        let u = Vec2::polar(t);
        if y.norm() < 1e-6 {
            continue;
        }
        let cot = u.dot(y) / u.cross(y);
        let fd = (sphere.g(t + step) - sphere.g(t - step)) / (2.0 * step);
        used += 1;
        if (fd - cot).abs() <= tol {
            ok += 1;
        }
    }
    (ok as f64 / used.max(1) as f64, used)
}
