//! The projective transfer of hyperbola chords to chords of the unit circle
//! through a pivot, the linear reduction of ellipses to the circle, and the
//! Radon slice `π_θ*μ` with its Fourier-slice cross-check.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chordmap::{projection_split, ChordError, ChordMap};
use crate::curve::{Angle, Curve, Point2};
use crate::dynamics::{CircleMap, CircleMapLift, DynamicsError};
use crate::measure::{level_sum, transform_sweep, Density, MeasureError, QuadratureDiagnostics, CRITICAL_SKIP, QUAD_TOL};
use crate::par;
use crate::quad;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransformError {
    #[error("point ({x}, {y}) lies on the line v = 0 where T is undefined")]
    DivisionByZeroLocus { x: f64, y: f64 },
    #[error("no pivot for θ = {theta}: the line direction is vertical")]
    InvalidPivot { theta: f64 },
    #[error("point is not on the unit circle (|α| = {norm})")]
    NotOnCircle { norm: f64 },
    #[error("the chord through the pivot is tangent or undefined")]
    TangentLine,
    #[error("ellipse semi-axes must satisfy a ≥ b > 0")]
    DegenerateEllipse,
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Chord(#[from] ChordError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// `T(u, v) = (u/v, 1/v)`. It is its own inverse and sends the hyperbola
/// `v² − u² = 1` into the unit circle.
pub fn projective_map(p: Point2) -> Result<Point2, TransformError> {
    if p.y == 0.0 || !p.is_finite() {
        return Err(TransformError::DivisionByZeroLocus { x: p.x, y: p.y });
    }
    Ok(Point2::new(p.x / p.y, 1.0 / p.y))
}

pub fn projective_map_inverse(p: Point2) -> Result<Point2, TransformError> {
    projective_map(p)
}

/// The point `(−tan θ, 0)` where `T` sends every line orthogonal to `θ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PivotPoint {
    pub location: Point2,
    pub theta: Angle,
}

impl PivotPoint {
    pub fn new(theta: Angle) -> Result<Self, TransformError> {
        let d = theta.direction();
        if d.x.abs() < 1e-12 {
            return Err(TransformError::InvalidPivot { theta: theta.radians() });
        }
        Ok(Self { location: Point2::new(-d.y / d.x, 0.0), theta })
    }
}

/// Second intersection of the line through the pivot and `α` with the unit
/// circle. Along `P + t(α − P)` the roots of `|P + t d|² = 1` multiply to
/// `(|P|² − 1)/|d|²`, and `t = 1` is one of them.
pub fn chord_through_point_map(pivot: &PivotPoint, alpha: Point2) -> Result<Point2, TransformError> {
    let norm = alpha.norm();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(TransformError::NotOnCircle { norm });
    }
    let p = pivot.location;
    let d = alpha - p;
    let dd = d.norm_sq();
    if dd < 1e-24 {
        return Err(TransformError::TangentLine);
    }
    let t2 = (p.norm_sq() - 1.0) / dd;
    Ok(p + d * t2)
}

/// The pivot chord map in circle parameter coordinates `s ↦ arg(β)/2π`.
#[derive(Clone, Copy, Debug)]
pub struct PivotCircleMap {
    pub pivot: PivotPoint,
}

impl CircleMap for PivotCircleMap {
    fn apply(&self, s: f64) -> Result<f64, DynamicsError> {
        let (sn, cs) = (TAU * s).sin_cos();
        let beta = chord_through_point_map(&self.pivot, Point2::new(cs, sn))
            .map_err(|e| DynamicsError::HypothesesFail(e.to_string()))?;
        Ok((beta.arg() / TAU).rem_euclid(1.0))
    }
}

#[derive(Clone, Copy, Debug)]
struct ComposedPivots(PivotCircleMap, PivotCircleMap);

impl CircleMap for ComposedPivots {
    fn apply(&self, s: f64) -> Result<f64, DynamicsError> {
        self.1.apply(self.0.apply(s)?)
    }
}

/// Lift of `Φ̃₂∘Φ̃₁` on the circle, conjugate through `T` to the composed
/// hyperbola chord maps.
pub fn hyperbola_transfer(theta1: Angle, theta2: Angle) -> Result<CircleMapLift, TransformError> {
    let a = PivotCircleMap { pivot: PivotPoint::new(theta1)? };
    let b = PivotCircleMap { pivot: PivotPoint::new(theta2)? };
    for p in [a.pivot, b.pivot] {
        if (p.location.norm() - 1.0).abs() < 1e-12 {
            return Err(TransformError::TangentLine);
        }
    }
    Ok(CircleMapLift::new(Arc::new(ComposedPivots(a, b)))?)
}

/// Largest `|T(γ(Φ(s))) − Φ̃(T(γ(s)))|` over `n` parameters where the
/// hyperbola chord map is defined.
pub fn conjugation_deviation(map: &ChordMap, n: usize) -> Result<f64, TransformError> {
    let pivot = PivotPoint::new(map.theta())?;
    let curve = map.curve();
    let paired = map.split().paired();
    let total = paired.measure();
    let pts: Vec<f64> = (0..n)
        .filter_map(|i| {
            let mut u = total * (i as f64 + 0.5) / n as f64;
            for &(a, b) in paired.parts() {
                if u <= b - a {
                    return Some(a + u);
                }
                u -= b - a;
            }
            None
        })
        .collect();
    let devs: Vec<Result<f64, TransformError>> = par::map_slice(&pts, |&s| {
        let t = map.eval(s)?;
        let lhs = projective_map(curve.position(t))?;
        let rhs = chord_through_point_map(&pivot, projective_map(curve.position(s))?)?;
        Ok((lhs - rhs).norm())
    });
    devs.into_iter().try_fold(0.0, |m: f64, d| Ok(m.max(d?)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityProbe {
    pub theta1: Angle,
    pub theta2: Angle,
    /// Angle against the real axis of the line through the first pivot and
    /// the `k`-th orbit point, in `(−π/2, π/2]`.
    pub phi: Vec<f64>,
    pub abs_increasing: bool,
    pub abs_decreasing: bool,
    /// `|φ_{k+2} − φ_k| ≤ 1e-9` throughout.
    pub two_periodic: bool,
}

impl MonotonicityProbe {
    pub fn strictly_monotone(&self) -> bool {
        self.abs_increasing || self.abs_decreasing
    }
}

/// Follows `α_{k+1} = Φ̃₂(Φ̃₁(α_k))` from `α₀ = (cos 2πs₀, sin 2πs₀)` and
/// records the chord angles seen from the first pivot.
pub fn angle_monotonicity_probe(
    theta1: Angle,
    theta2: Angle,
    s0: f64,
    n: usize,
) -> Result<MonotonicityProbe, TransformError> {
    let a = PivotPoint::new(theta1)?;
    let b = PivotPoint::new(theta2)?;
    let (sn, cs) = (TAU * s0).sin_cos();
    let mut alpha = Point2::new(cs, sn);
    let angle = |p: Point2| {
        let d = p - a.location;
        let mut phi = d.y.atan2(d.x);
        if phi > PI / 2.0 {
            phi -= PI;
        } else if phi <= -PI / 2.0 {
            phi += PI;
        }
        phi
    };
    let mut phi = vec![angle(alpha)];
    for _ in 0..n {
        alpha = chord_through_point_map(&b, chord_through_point_map(&a, alpha)?)?;
        // Keep the orbit on the circle despite rounding.
        alpha = alpha.normalized();
        phi.push(angle(alpha));
    }
    let abs: Vec<f64> = phi.iter().map(|p| p.abs()).collect();
    let abs_increasing = abs.windows(2).all(|w| w[1] > w[0]);
    let abs_decreasing = abs.windows(2).all(|w| w[1] < w[0]);
    let two_periodic = phi.windows(3).all(|w| (w[2] - w[0]).abs() <= 1e-9);
    Ok(MonotonicityProbe { theta1, theta2, phi, abs_increasing, abs_decreasing, two_periodic })
}

/// Which semi-axis the linear map stretches before normalizing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisScaling {
    /// `(x, y) ↦ (x, a y/b)`, then divide by `a`.
    Minor,
    /// `(x, y) ↦ (b x/a, y)`, then divide by `b`.
    Major,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipseReduction {
    pub phi1: Angle,
    pub phi2: Angle,
    /// `(φ₂ − φ₁)/π mod 1`, the quantity the circle criterion reads.
    pub ratio: f64,
    pub constructive_difference: f64,
    /// `arcsin(b sin θ₂/√(a²+b²)) − arcsin(b sin θ₁/√(a²+b²))`, kept for
    /// comparison only: it does not reduce to `θ₂ − θ₁` when `a = b`.
    pub closed_formula: f64,
    pub discrepancy: f64,
}

type Mat2 = [[f64; 2]; 2];

fn mat_mul(a: Mat2, b: Mat2) -> Mat2 {
    let mut c = [[0.0; 2]; 2];
    for (i, row) in c.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn inverse_transpose(m: Mat2) -> Mat2 {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [[m[1][1] / det, -m[1][0] / det], [-m[0][1] / det, m[0][0] / det]]
}

/// Angles on the unit circle equivalent to `θ₁, θ₂` on the ellipse with
/// semi-axes `a ≥ b`.
///
/// A linear map `L` with `L(Γ)` the unit circle turns `μ` into `L_*μ` with
/// `(L_*μ)^(ξ) = μ̂(Lᵀξ)`, so the line `θ` corresponds to the direction
/// `L⁻ᵀθ` on the circle.
pub fn ellipse_to_circle(a: f64, b: f64, theta1: Angle, theta2: Angle) -> Result<EllipseReduction, TransformError> {
    ellipse_to_circle_with(a, b, 0.0, theta1, theta2, AxisScaling::Minor)
}

pub fn ellipse_to_circle_with(
    a: f64,
    b: f64,
    rotation: f64,
    theta1: Angle,
    theta2: Angle,
    scaling: AxisScaling,
) -> Result<EllipseReduction, TransformError> {
    if !(a.is_finite() && b > 0.0 && a >= b) {
        return Err(TransformError::DegenerateEllipse);
    }
    let (sr, cr) = rotation.sin_cos();
    let unrotate = [[cr, sr], [-sr, cr]];
    let stretch = match scaling {
        AxisScaling::Minor => [[1.0 / a, 0.0], [0.0, (a / b) / a]],
        AxisScaling::Major => [[(b / a) / b, 0.0], [0.0, 1.0 / b]],
    };
    let l = mat_mul(stretch, unrotate);
    let push = inverse_transpose(l);
    let image = |t: Angle| {
        let d = t.direction();
        let v = Point2::new(push[0][0] * d.x + push[0][1] * d.y, push[1][0] * d.x + push[1][1] * d.y);
        Angle::new(v.y.atan2(v.x)).normalized()
    };
    let (phi1, phi2) = (image(theta1), image(theta2));
    let constructive_difference = phi2.value() - phi1.value();
    let ratio = (constructive_difference / PI).rem_euclid(1.0);
    let k = b / (a * a + b * b).sqrt();
    let closed_formula = (k * theta2.radians().sin()).asin() - (k * theta1.radians().sin()).asin();
    Ok(EllipseReduction {
        phi1,
        phi2,
        ratio,
        constructive_difference,
        closed_formula,
        discrepancy: (constructive_difference - closed_formula).abs(),
    })
}

/// Values of the projected density `ζ ↦ Σ f(s)/|π_θγ'(s)|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadonSlice {
    pub theta: Angle,
    pub zeta: Vec<f64>,
    pub values: Vec<Complex64>,
    /// Grid points dropped for lying within `1e-6` of a critical value.
    pub excluded: usize,
}

impl RadonSlice {
    /// Rows `(ζ, re, im)` for CSV export.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.zeta.iter().zip(&self.values).map(|(&z, v)| (z, v.re, v.im))
    }

    pub fn max_modulus(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

pub fn radon_projection(density: &Density, curve: &Curve, theta: Angle, zetas: &[f64]) -> Result<RadonSlice, TransformError> {
    let split = projection_split(curve, theta)?;
    let skip = split.value_breakpoints();
    let zeta: Vec<f64> =
        zetas.iter().copied().filter(|z| skip.iter().all(|c| (z - c).abs() > CRITICAL_SKIP)).collect();
    let values = par::map_slice(&zeta, |&z| level_sum(density, curve, &split, z));
    Ok(RadonSlice { theta, excluded: zetas.len() - zeta.len(), zeta, values })
}

/// `∫ R(ζ) e^{−iξζ} dζ` for each `ξ`, integrating between consecutive
/// critical values with `ζ = m − r cos φ`. The factor `r sin φ` cancels the
/// inverse square-root growth of the slice at folds.
pub fn slice_transform(
    density: &Density,
    curve: &Curve,
    theta: Angle,
    xis: &[f64],
    tol: f64,
) -> Result<(Vec<Complex64>, QuadratureDiagnostics), TransformError> {
    let split = projection_split(curve, theta)?;
    // Only the projection of the support matters; a compactly supported
    // density on a long window would otherwise pay for the whole range.
    let dir = theta.direction();
    let proj = |s: f64| curve.position(s).dot(dir);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in &split.pieces {
        for &(a, b) in density.support().parts() {
            let (a, b) = (a.max(p.lo), b.min(p.hi));
            if b > a {
                for z in [proj(a), proj(b)] {
                    lo = lo.min(z);
                    hi = hi.max(z);
                }
            }
        }
    }
    if !(hi > lo) {
        return Ok((vec![Complex64::new(0.0, 0.0); xis.len()], QuadratureDiagnostics { nodes: 0, level: 0, max_change: 0.0, converged: true }));
    }
    // The slice also jumps where a corner, a joint or a jump of the density
    // projects inside a range.
    let mut zs = vec![lo, hi];
    let support_ends = density.support().parts().iter().flat_map(|&(a, b)| [a, b]);
    let kinks = curve.breaks().iter().chain(density.breaks()).copied().chain(support_ends);
    zs.extend(split.value_breakpoints().into_iter().chain(kinks.map(proj)).filter(|&z| z > lo && z < hi));
    zs.sort_by(f64::total_cmp);
    zs.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * (1.0 + b.abs()));
    let xi_max = xis.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let layout = |level: u32| -> (Vec<f64>, Vec<f64>) {
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for w in zs.windows(2) {
            let (za, zb) = (w[0], w[1]);
            if zb - za <= 1e-14 {
                continue;
            }
            let osc = xi_max * (zb - za) / TAU;
            let base = (10.0 * osc).ceil().max(4.0) as usize;
            let (m, r) = (0.5 * (za + zb), 0.5 * (zb - za));
            let mut ph = Vec::new();
            let mut pw = Vec::new();
            quad::push_composite(0.0, PI, base << level, &mut ph, &mut pw);
            for (p, wt) in ph.into_iter().zip(pw) {
                nodes.push(m - r * p.cos());
                weights.push(wt * r * p.sin());
            }
        }
        (nodes, weights)
    };
    let eval = |level: u32| -> (Vec<Complex64>, usize) {
        let (nodes, weights) = layout(level);
        let vals = par::map_slice(&nodes, |&z| level_sum(density, curve, &split, z));
        let sums = par::map_slice(xis, |&xi| {
            nodes.iter().zip(&weights).zip(&vals).map(|((&z, &w), &v)| {
                let (s, c) = (xi * z).sin_cos();
                v * w * Complex64::new(c, -s)
            }).sum::<Complex64>()
        });
        (sums, nodes.len())
    };
    let (mut prev, _) = eval(0);
    let max_level = 9;
    for level in 1..=max_level {
        let (cur, nodes) = eval(level);
        let change = prev.iter().zip(&cur).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prev = cur;
        if change <= tol || level == max_level {
            return Ok((prev, QuadratureDiagnostics { nodes, level, max_change: change, converged: change <= tol }));
        }
    }
    unreachable!()
}

/// `∫ R(ζ) dζ`, which equals the total mass `μ̂(0)`.
pub fn slice_mass(density: &Density, curve: &Curve, theta: Angle) -> Result<Complex64, TransformError> {
    Ok(slice_transform(density, curve, theta, &[0.0], QUAD_TOL)?.0[0])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceCheck {
    pub theta: Angle,
    pub xi: Vec<f64>,
    pub slice_side: Vec<Complex64>,
    pub direct_side: Vec<Complex64>,
    pub max_discrepancy: f64,
    pub slice_quadrature: QuadratureDiagnostics,
    pub direct_quadrature: QuadratureDiagnostics,
}

/// Compares the 1-D transform of the slice with `μ̂(ξθ)`.
pub fn fourier_slice_check(density: &Density, curve: &Curve, theta: Angle, xis: &[f64]) -> Result<SliceCheck, TransformError> {
    let (slice_side, slice_quadrature) = slice_transform(density, curve, theta, xis, QUAD_TOL)?;
    let pts: Vec<Point2> = xis.iter().map(|&x| theta.direction() * x).collect();
    let sweep = transform_sweep(density, curve, &pts, QUAD_TOL);
    let max_discrepancy = slice_side.iter().zip(&sweep.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    Ok(SliceCheck {
        theta,
        xi: xis.to_vec(),
        slice_side,
        direct_side: sweep.values,
        max_discrepancy,
        slice_quadrature,
        direct_quadrature: sweep.diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::CurveSpec;
    use crate::intervals::IntervalSet;

    fn close(p: Point2, x: f64, y: f64, tol: f64) -> bool {
        (p.x - x).abs() <= tol && (p.y - y).abs() <= tol
    }

    #[test]
    fn projective_examples() {
        assert!(close(projective_map(Point2::new(0.0, 1.0)).unwrap(), 0.0, 1.0, 0.0));
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(projective_map(Point2::new(1.0, 2f64.sqrt())).unwrap(), h, h, 1e-15));
        assert!(matches!(projective_map(Point2::new(1.0, 0.0)), Err(TransformError::DivisionByZeroLocus { .. })));
        let hyp = Curve::new(CurveSpec::HyperbolaStd { x_max: 50.0 }).unwrap();
        for i in 0..1000 {
            let s = 0.02 + 0.96 * (i as f64 + 0.5) / 1000.0;
            if !hyp.domain().contains(s) {
                continue;
            }
            let p = hyp.position(s);
            let q = projective_map(p).unwrap();
            assert!((q.norm() - 1.0).abs() <= 1e-12);
            assert!((projective_map_inverse(q).unwrap() - p).norm() <= 1e-12 * p.norm());
        }
    }

    #[test]
    fn orthogonal_lines_pass_through_pivot() {
        let theta = Angle::new(PI / 3.0);
        let pivot = PivotPoint::new(theta).unwrap();
        assert!(close(pivot.location, -3f64.sqrt(), 0.0, 1e-15));
        let (d, n) = (theta.direction(), theta.perp());
        for c in [0.7, 2.0, -1.5] {
            let a = projective_map(d * c + n * 0.4).unwrap();
            let b = projective_map(d * c - n * 1.3).unwrap();
            assert!((a - pivot.location).cross(b - pivot.location).abs() < 1e-12);
        }
        assert!(PivotPoint::new(Angle::new(PI / 2.0)).is_err());
    }

    #[test]
    fn chord_examples() {
        let centre = PivotPoint::new(Angle::new(0.0)).unwrap();
        let a = Point2::new(0.6, 0.8);
        assert!(close(chord_through_point_map(&centre, a).unwrap(), -0.6, -0.8, 1e-15));
        let p = PivotPoint::new(Angle::new(PI / 3.0)).unwrap();
        let b = chord_through_point_map(&p, Point2::new(0.0, 1.0)).unwrap();
        assert!(close(b, -3f64.sqrt() / 2.0, 0.5, 1e-14));
        assert!(matches!(chord_through_point_map(&p, Point2::new(0.0, 2.0)), Err(TransformError::NotOnCircle { .. })));
    }

    #[test]
    fn conjugation() {
        let hyp = Arc::new(Curve::new(CurveSpec::HyperbolaStd { x_max: 50.0 }).unwrap());
        for th in [PI / 3.0, -PI / 6.0] {
            let m = ChordMap::new(hyp.clone(), Angle::new(th)).unwrap();
            assert!(conjugation_deviation(&m, 1000).unwrap() <= 1e-9);
        }
    }

    #[test]
    fn monotonicity_probe() {
        let p = angle_monotonicity_probe(Angle::new(3.0 * PI / 8.0), Angle::new(PI / 8.0), 0.3, 100).unwrap();
        assert!(p.two_periodic && !p.strictly_monotone());
        let q = angle_monotonicity_probe(Angle::new(3.0 * PI / 8.0), Angle::new(-PI / 8.0), 0.3, 100).unwrap();
        assert!(q.strictly_monotone() && !q.two_periodic);
        let z = angle_monotonicity_probe(Angle::new(0.3), Angle::new(-0.5), 0.1, 0).unwrap();
        assert_eq!(z.phi.len(), 1);
    }

    #[test]
    fn ellipse_reduction() {
        for t in [0.0, 0.4, 1.3, 2.9] {
            let r = ellipse_to_circle(1.0, 1.0, Angle::new(t), Angle::new(t + 0.5)).unwrap();
            assert!((r.phi1.value() - Angle::new(t).value()).abs() < 1e-14);
            assert!((r.phi2.value() - Angle::new(t + 0.5).value()).abs() < 1e-14);
        }
        let r = ellipse_to_circle(2.0, 1.0, Angle::new(0.0), Angle::new(PI / 2.0)).unwrap();
        assert!((r.ratio - 0.5).abs() < 1e-14);
        assert!((r.closed_formula - (1.0 / 5f64.sqrt()).asin()).abs() < 1e-14);
        let same = ellipse_to_circle(2.0, 1.0, Angle::new(0.7), Angle::new(0.7)).unwrap();
        assert_eq!(same.phi1, same.phi2);
        // Which axis gets stretched must not change the ratio.
        for (t1, t2) in [(0.3, 1.1), (-0.4, 0.9), (2.0, 0.2)] {
            let m = ellipse_to_circle_with(3.0, 1.5, 0.4, Angle::new(t1), Angle::new(t2), AxisScaling::Minor).unwrap();
            let n = ellipse_to_circle_with(3.0, 1.5, 0.4, Angle::new(t1), Angle::new(t2), AxisScaling::Major).unwrap();
            assert!((m.ratio - n.ratio).abs() < 1e-13);
        }
        assert!(matches!(ellipse_to_circle(1.0, 2.0, Angle::new(0.0), Angle::new(1.0)), Err(TransformError::DegenerateEllipse)));
    }

    #[test]
    fn ellipse_reduction_matches_chord_dynamics() {
        // The circle criterion on the reduced angles has to agree with the
        // rotation number measured on the ellipse itself.
        let r = ellipse_to_circle(2.0, 1.0, Angle::new(0.0), Angle::new(1.0)).unwrap();
        let ell = Arc::new(Curve::new(CurveSpec::Ellipse { a: 2.0, b: 1.0, center: [0.0, 0.0], rotation: 0.0 }).unwrap());
        let lift = crate::dynamics::lift_for_angles(ell, Angle::new(0.0), Angle::new(1.0)).unwrap();
        let rho = crate::dynamics::rotation_number(&lift, 0.1, 4000).unwrap().value.rem_euclid(1.0);
        let d = (rho - r.ratio).abs().min((rho + r.ratio - 1.0).abs());
        assert!(d < 1e-3, "ρ {rho} vs {}", r.ratio);
    }

    #[test]
    fn radon_of_uniform_circle() {
        let c = Curve::circle();
        let one = Density::real(&c, "one", |_| 1.0);
        let zetas: Vec<f64> = (0..99).map(|i| -0.98 + 1.96 * i as f64 / 98.0).collect();
        let r = radon_projection(&one, &c, Angle::new(0.0), &zetas).unwrap();
        for (z, v, _) in r.rows() {
            let expect = 1.0 / (PI * (1.0 - z * z).sqrt());
            assert!((v - expect).abs() < 1e-10 * expect, "ζ={z}");
        }
        let zero = radon_projection(&Density::zero(&c), &c, Angle::new(0.4), &zetas).unwrap();
        assert_eq!(zero.max_modulus(), 0.0);
        assert!((slice_mass(&one, &c, Angle::new(0.9)).unwrap() - 1.0).norm() < 1e-6);
    }

    #[test]
    fn slice_check_examples() {
        let c = Curve::circle();
        let xis: Vec<f64> = (0..81).map(|i| -20.0 + 0.5 * i as f64).collect();
        let one = Density::real(&c, "one", |_| 1.0);
        let r = fourier_slice_check(&one, &c, Angle::new(0.0), &xis).unwrap();
        assert!(r.max_discrepancy <= 1e-6);
        let s = Density::real(&c, "sin4", |s| (4.0 * PI * s).sin());
        let r = fourier_slice_check(&s, &c, Angle::new(0.0), &xis).unwrap();
        assert!(r.max_discrepancy <= 1e-8);
        assert!(r.slice_side.iter().all(|v| v.norm() <= 1e-8));
        let mix = Density::closed_form(&c, "mix", |s| Complex64::new(1.0 + s, (TAU * s).cos()));
        let r = fourier_slice_check(&mix, &c, Angle::new(0.7), &[0.0]).unwrap();
        let mass = crate::measure::fourier_transform(&mix, &c, Point2::new(0.0, 0.0)).unwrap();
        assert!((r.slice_side[0] - mass).norm() < 1e-9 && (r.direct_side[0] - mass).norm() < 1e-9);
    }

    #[test]
    fn slice_check_open_curves() {
        let par = Curve::new(CurveSpec::Graph {
            psi: crate::curve::PsiSpec::Power { alpha: 2.0, signed: false },
            window: [-50.0, 50.0],
        })
        .unwrap();
        let f = Density::real(&par, "gauss", |s| (-s * s).exp()).restricted(IntervalSet::single(-6.0, 6.0), vec![]);
        let xis: Vec<f64> = (0..21).map(|i| -20.0 + 2.0 * i as f64).collect();
        let r = fourier_slice_check(&f, &par, Angle::new(0.5), &xis).unwrap();
        assert!(r.max_discrepancy <= 1e-6, "{}", r.max_discrepancy);
        let sq = Curve::new(CurveSpec::Polygon { vertices: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]] }).unwrap();
        let g = Density::real(&sq, "g", |s| 1.0 + (TAU * s).cos());
        let r = fourier_slice_check(&g, &sq, Angle::new(0.3), &xis).unwrap();
        assert!(r.max_discrepancy <= 1e-6, "{}", r.max_discrepancy);
    }
}
