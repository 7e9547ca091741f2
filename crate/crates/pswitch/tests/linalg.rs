use std::f64::consts::PI;

use proptest::prelude::*;
use pswitch::linalg::{kernel_direction, oriented_angle, singular_values, spectrum, Mat2, Vec2};

fn entry() -> impl Strategy<Value = f64> {
    -3.0..3.0f64
}

fn mat() -> impl Strategy<Value = Mat2> {
    (entry(), entry(), entry(), entry()).prop_map(|(a, b, c, d)| Mat2::new(a, b, c, d))
}

fn nonzero_vec() -> impl Strategy<Value = Vec2> {
    (0.0..2.0 * PI, 0.1..5.0f64).prop_map(|(t, r)| Vec2::polar(t) * r)
}

/// Roots of x² − p x + q by the textbook formula.
fn quad_roots(p: f64, q: f64) -> (f64, f64) {
    let d = (p * p / 4.0 - q).sqrt();
    (p / 2.0 - d, p / 2.0 + d)
}

#[test]
fn a0_singular_values_against_gram_roots() {
    let a = Mat2::new(-0.2, -1.0, 1.0, -0.5);
    let g = a.transpose() * a;
    assert!((g.a11 - 1.04).abs() < 1e-15 && (g.a12 + 0.3).abs() < 1e-15 && (g.a22 - 1.25).abs() < 1e-15);
    let (e1, e2) = quad_roots(1.04 + 1.25, 1.04 * 1.25 - 0.09);
    let (s1, s2) = singular_values(&a);
    assert!((s1 - e1.sqrt()).abs() < 1e-12);
    assert!((s2 - e2.sqrt()).abs() < 1e-12);
    assert!((s1 - 0.909).abs() < 1e-3 && (s2 - 1.209).abs() < 1e-3);
}

#[test]
fn kernel_maps_to_zero_on_rank_one() {
    let m = Mat2::new(0.0, 0.0, 1.0, -1.0);
    let k = kernel_direction(&m).unwrap();
    assert!(m.apply(k).norm() < 1e-15);
}

proptest! {
    #[test]
    fn shift_moves_abscissa(m in mat(), alpha in -5.0..5.0f64) {
        let a = spectrum(&m.shift(alpha)).abscissa;
        let b = spectrum(&m).abscissa - alpha;
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs() + m.frobenius()));
    }

    #[test]
    fn singular_value_identities(m in mat()) {
        let (s1, s2) = singular_values(&m);
        let f2 = m.frobenius().powi(2);
        prop_assert!(s1 <= s2);
        prop_assert!((s1 * s2 - m.det().abs()).abs() <= 1e-12 * (1.0 + f2));
        prop_assert!((s1 * s1 + s2 * s2 - f2).abs() <= 1e-12 * (1.0 + f2));
    }

    #[test]
    fn kernel_is_annihilated(u in nonzero_vec(), v in nonzero_vec()) {
        let m = u.outer(v);
        let k = kernel_direction(&m).unwrap();
        prop_assert!((k.norm() - 1.0).abs() < 1e-12);
        prop_assert!(m.apply(k).norm() <= 1e-10 * m.frobenius());
    }

    #[test]
    fn oriented_angle_antisymmetry(a in nonzero_vec(), b in nonzero_vec()) {
        let s = oriented_angle(a, b).unwrap() + oriented_angle(b, a).unwrap();
        prop_assert!(s.abs() < 1e-12 || (s - 2.0 * PI).abs() < 1e-12);
        prop_assert_eq!(oriented_angle(a, a).unwrap(), 0.0);
    }
}
