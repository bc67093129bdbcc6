use std::f64::consts::PI;
use std::sync::Arc;

use approx::assert_relative_eq;
use hup_core::chordmap::ChordMap;
use hup_core::curve::{Angle, Curve, CurveSpec, Point2, PsiSpec};
use hup_core::dynamics::lift_for_angles;
use hup_core::measure::{fourier_transform, Density};
use hup_core::transform::{projective_map, projective_map_inverse};
use num_complex::Complex64;
use proptest::prelude::*;

fn curves() -> Vec<Arc<Curve>> {
    vec![
        Arc::new(Curve::circle()),
        Arc::new(Curve::new(CurveSpec::Ellipse { a: 2.0, b: 1.0, center: [0.3, -0.2], rotation: 0.5 }).unwrap()),
        Arc::new(Curve::new(CurveSpec::Graph { psi: PsiSpec::Power { alpha: 2.0, signed: false }, window: [-50.0, 50.0] }).unwrap()),
        Arc::new(Curve::new(CurveSpec::Graph { psi: PsiSpec::Power { alpha: 4.0, signed: false }, window: [-10.0, 10.0] }).unwrap()),
        Arc::new(Curve::new(CurveSpec::HyperbolaStd { x_max: 50.0 }).unwrap()),
        Arc::new(Curve::new(CurveSpec::Polygon { vertices: vec![[0.0, 0.0], [2.0, 0.0], [2.5, 1.0], [0.5, 1.5]] }).unwrap()),
    ]
}

/// A point of the paired set picked by a uniform fraction of its length.
fn pick(m: &ChordMap, u: f64) -> Option<f64> {
    let set = m.split().paired();
    let mut r = u * set.measure();
    for &(a, b) in set.parts() {
        if r <= b - a {
            return Some(a + r);
        }
        r -= b - a;
    }
    None
}

fn circular_gap(a: f64, b: f64, closed: bool) -> f64 {
    let d = (a - b).abs();
    if closed {
        d.min(1.0 - d)
    } else {
        d
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn chord_map_is_an_involution(ci in 0usize..6, theta in 0.0..PI, u in 0.0..1.0f64) {
        let c = curves()[ci].clone();
        let Ok(m) = ChordMap::new(c.clone(), Angle::new(theta)) else { return Ok(()) };
        let Some(s) = pick(&m, u) else { return Ok(()) };
        let t = m.eval(s).unwrap();
        prop_assert!(circular_gap(m.eval(t).unwrap(), s, c.is_closed()) <= 1e-9);
        let scale = c.position(s).norm().max(1.0);
        let gap = (c.projection(Angle::new(theta), t).unwrap() - c.projection(Angle::new(theta), s).unwrap()).abs();
        prop_assert!(gap <= 1e-10 * scale);
    }

    #[test]
    fn derivative_matches_difference(ci in 0usize..5, theta in 0.05..PI - 0.05, u in 0.0..1.0f64) {
        let c = curves()[ci].clone();
        let m = ChordMap::new(c.clone(), Angle::new(theta)).unwrap();
        let Some(s) = pick(&m, u) else { return Ok(()) };
        if m.split().critical_set.iter().any(|&x| circular_gap(x, s, c.is_closed()) < 0.02) {
            return Ok(());
        }
        let h = 1e-6 * (1.0 + s.abs());
        let (Ok(a), Ok(b)) = (m.eval(s + h), m.eval(s - h)) else { return Ok(()) };
        let mut diff = a - b;
        if c.is_closed() {
            diff -= diff.round();
        }
        let d = m.derivative(s).unwrap();
        prop_assert!((d - diff / (2.0 * h)).abs() <= 1e-5 * d.abs(), "{} vs {}", d, diff / (2.0 * h));
    }

    #[test]
    fn lift_has_degree_one(t1 in 0.0..PI, gap in 0.1..PI - 0.1, x in -5.0..5.0f64) {
        let ell = Arc::new(Curve::new(CurveSpec::Ellipse { a: 2.0, b: 1.0, center: [0.0, 0.0], rotation: 0.0 }).unwrap());
        let lift = lift_for_angles(ell, Angle::new(t1), Angle::new(t1 + gap)).unwrap();
        let y = lift.eval(x).unwrap();
        prop_assert!((lift.eval(x + 1.0).unwrap() - y - 1.0).abs() <= 1e-10);
        prop_assert!(lift.eval(x + 1e-3).unwrap() > y);
    }

    #[test]
    fn projective_map_is_an_involution(u in -100.0..100.0f64, v in prop_oneof![-100.0..-1e-3f64, 1e-3..100.0f64]) {
        let p = Point2::new(u, v);
        let q = projective_map(p).unwrap();
        let back = projective_map_inverse(q).unwrap();
        assert_relative_eq!(back.x, u, max_relative = 1e-12, epsilon = 1e-12);
        assert_relative_eq!(back.y, v, max_relative = 1e-12);
    }

    #[test]
    fn transform_is_linear(a in -2.0..2.0f64, b in -2.0..2.0f64, t in -30.0..30.0f64, phi in 0.0..PI) {
        let c = Curve::circle();
        let f = Density::real(&c, "f", |s| (2.0 * PI * s).cos() + s * s);
        let g = Density::real(&c, "g", |s| (6.0 * PI * s).sin());
        let h = f.combine(Complex64::new(a, 0.0), &g, Complex64::new(b, 0.0));
        let xi = Angle::new(phi).direction() * t;
        let lhs = fourier_transform(&h, &c, xi).unwrap();
        let rhs = fourier_transform(&f, &c, xi).unwrap() * a + fourier_transform(&g, &c, xi).unwrap() * b;
        prop_assert!((lhs - rhs).norm() <= 1e-10);
    }
}
