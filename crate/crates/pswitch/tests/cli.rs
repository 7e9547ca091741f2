use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use proptest::prelude::*;
use pswitch::io::{parse_polygon_csv, parse_s_vector, parse_spec, parse_sphere_csv, spec_to_json, validate_polyline, CSV_ROWS};
use pswitch::Vec2;
use serde_json::Value;
use tempfile::TempDir;

fn pswitch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pswitch")).args(args).output().expect("binary runs")
}

fn put(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("report is JSON")
}

const A0: &str = "[[-0.2, -1.0], [1.0, -0.5]]";

fn ball(r: f64) -> String {
    format!(r#"{{"kind": "frobenius_ball", "center": {A0}, "radius": {r}}}"#)
}

#[test]
fn stability_exit_codes() {
    let dir = TempDir::new().unwrap();
    let stable = pswitch(&["stability", s(&put(&dir, "s.json", &ball(0.1)))]);
    assert_eq!(stable.status.code(), Some(0));
    assert_eq!(report(&stable)["verdict"], "stable");
    let unstable = pswitch(&["stability", s(&put(&dir, "u.json", &ball(0.4)))]);
    assert_eq!(unstable.status.code(), Some(2));
    assert_eq!(report(&unstable)["verdict"], "unstable");
}

#[test]
fn parse_errors_report_position() {
    let dir = TempDir::new().unwrap();
    let bad = put(&dir, "bad.json", "{\"kind\": \"finite\",\n \"matrices\": [[[1, 2], [3, x]]]}");
    let out = pswitch(&["stability", s(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "{err}");
    let missing = pswitch(&["lyapunov", s(&dir.path().join("nope.json"))]);
    assert_eq!(missing.status.code(), Some(1));
    let reducible = put(&dir, "red.json", r#"{"kind": "finite", "matrices": [[[-1, 0], [0, -2]]]}"#);
    assert_eq!(pswitch(&["stability", s(&reducible)]).status.code(), Some(1));
}

#[test]
fn lyapunov_of_single_matrix() {
    let dir = TempDir::new().unwrap();
    let spec = put(&dir, "a.json", &format!(r#"{{"kind": "finite", "matrices": [{A0}]}}"#));
    let out = pswitch(&["lyapunov", s(&spec), "--tol", "1e-8"]);
    assert_eq!(out.status.code(), Some(0));
    let sigma = report(&out)["sigma"].as_f64().unwrap();
    assert!((sigma + 0.35).abs() < 1e-7, "{sigma}");
}

#[test]
fn inverse_of_square_emits_spec() {
    let dir = TempDir::new().unwrap();
    let poly = put(&dir, "sq.csv", "x1,x2\n1,-1\n1,1\n-1,1\n-1,-1\n");
    let out = pswitch(&["inverse", s(&poly)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let spec = parse_spec(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    let set = spec.to_control_set().unwrap();
    assert_eq!(set.generators().len(), 2);
    let written = put(&dir, "sys.json", std::str::from_utf8(&out.stdout).unwrap());
    let norm = pswitch(&["norm", s(&written)]);
    assert_eq!(norm.status.code(), Some(0), "{}", String::from_utf8_lossy(&norm.stderr));
}

#[test]
fn rotation_norm_csv_is_a_circle() {
    let dir = TempDir::new().unwrap();
    let spec = put(&dir, "rot.json", r#"{"kind": "finite", "matrices": [[[0, -1], [1, 0]]]}"#);
    let csv = dir.path().join("rot.csv");
    let svg = dir.path().join("rot.svg");
    let out = pswitch(&["norm", s(&spec), "--csv", s(&csv), "--svg", s(&svg)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = parse_sphere_csv(&std::fs::read_to_string(&csv).unwrap()).unwrap();
    assert_eq!(rows.len(), CSV_ROWS);
    let r0 = rows[0].1.norm();
    let worst = rows.iter().map(|(_, p)| (p.norm() / r0 - 1.0).abs()).fold(0.0, f64::max);
    assert!(worst <= 1e-9, "{worst}");
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
    assert_eq!(report(&out)["artifacts"].as_array().unwrap().len(), 2);
}

#[test]
fn runs_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let spec = put(&dir, "pair.json", r#"{"kind": "finite", "matrices": [[[-0.2, -1.0], [1.0, -0.5]], [[-1.0, 0.3], [-0.4, -0.1]]]}"#);
    let run = |tag: &str| {
        let csv = dir.path().join(format!("{tag}.csv"));
        let out = pswitch(&["norm", s(&spec), "--csv", s(&csv)]);
        assert_eq!(out.status.code(), Some(0));
        let mut rep = report(&out);
        rep["wall_time_ms"] = Value::Null;
        rep["artifacts"] = Value::Null;
        (std::fs::read(&csv).unwrap(), rep)
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn ball_radius_of_a0() {
    let dir = TempDir::new().unwrap();
    let spec = put(&dir, "c.json", &format!(r#"{{"kind": "finite", "matrices": [{A0}]}}"#));
    let out = pswitch(&["ball-radius", s(&spec), "--tol", "1e-5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out)["details"]["radius"].as_f64().unwrap();
    assert!((r - 0.348004).abs() < 2e-5, "{r}");
}

#[test]
fn reduce_noise_writes_finite_spec() {
    let dir = TempDir::new().unwrap();
    let spec = put(
        &dir,
        "n.json",
        &format!(r#"{{"kind": "noisy", "matrices": [{A0}], "noise": {{"type": "elementwise", "eps": [[0.05, 0.05], [0.05, 0.05]]}}}}"#),
    );
    let target = dir.path().join("out.json");
    let out = pswitch(&["reduce-noise", s(&spec), "--out", s(&target)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let set = parse_spec(&std::fs::read_to_string(&target).unwrap()).unwrap().to_control_set().unwrap();
    assert_eq!(set.generators().len(), 16);
    let bad = pswitch(&["reduce-noise", s(&put(&dir, "b.json", &ball(0.1)))]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn bad_s_vector_is_an_error() {
    let dir = TempDir::new().unwrap();
    let spec = put(&dir, "sq.json", r#"{"kind": "finite", "matrices": [[[0, 0], [0, -1]], [[-1, 0], [0, 0]]], "allow_reducible": true}"#);
    assert_eq!(pswitch(&["norm", s(&spec), "--s-vector", "0.1,zz"]).status.code(), Some(1));
    assert_eq!(pswitch(&["norm", s(&spec), "--s-vector", "[0,0]"]).status.code(), Some(0));
}

fn seeds(target: &str) -> Vec<String> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<String> = std::fs::read_dir(dir).unwrap().map(|e| std::fs::read_to_string(e.unwrap().path()).unwrap()).collect();
    out.sort();
    assert!(!out.is_empty());
    out
}

#[test]
fn fuzz_seeds_are_valid_inputs() {
    for text in seeds("parse_spec") {
        let spec = parse_spec(&text).unwrap();
        assert_eq!(parse_spec(&spec_to_json(&spec)).unwrap(), spec);
        spec.to_control_set().unwrap();
    }
    for text in seeds("parse_polygon_csv") {
        let pts = parse_polygon_csv(&text).unwrap();
        pswitch::applications::SymmetricPolygon::new(pts).unwrap();
    }
    for text in seeds("parse_sphere_csv") {
        let pts: Vec<Vec2> = parse_sphere_csv(&text).unwrap().into_iter().map(|r| r.1).collect();
        validate_polyline(&pts).unwrap();
    }
    for text in seeds("parse_s_vector") {
        parse_s_vector(&text).unwrap();
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sphere_csv_round_trips(a in 0.2..5.0f64, b in 0.2..5.0f64, t in 0.0..3.0f64) {
        let (c, sn) = (t.cos(), t.sin());
        let m = pswitch::Mat2::new(a * c * c + b * sn * sn, (a - b) * c * sn, (a - b) * c * sn, a * sn * sn + b * c * c);
        let sphere = pswitch::barabanov::SphereModel::ellipse(m);
        let text = pswitch::io::sphere_csv(&sphere).unwrap();
        let rows = parse_sphere_csv(&text).unwrap();
        prop_assert_eq!(rows.len(), CSV_ROWS);
        let pts: Vec<Vec2> = rows.iter().map(|r| r.1).collect();
        prop_assert!(validate_polyline(&pts).is_ok());
    }

    #[test]
    fn s_vector_round_trips(v in proptest::collection::vec(-1e6..1e6f64, 0..8)) {
        let text = v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        prop_assert_eq!(parse_s_vector(&text).unwrap(), v.clone());
        prop_assert_eq!(parse_s_vector(&format!("[{text}]")).unwrap(), v);
    }
}
