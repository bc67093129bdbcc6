//! Parametrized plane curves, projections onto directions, and corner cones.
//!
//! Every curve family is evaluated in closed form. Closed curves are
//! 1-periodic in the parameter; unbounded ones (graphs, the hyperbola) carry
//! an explicit truncation window so that all numerics stay on a compact set.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Smoothness class reported for real-analytic / C-infinity curves.
pub const SMOOTH: u32 = u32::MAX;

/// Angular threshold (radians) separating corners from smooth joints.
pub const CORNER_ANGLE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Self) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Self) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn normalized(self) -> Self {
        let n = self.norm();
        Self::new(self.x / n, self.y / n)
    }

    /// Counter-clockwise quarter turn.
    pub fn perp(self) -> Self {
        Self::new(-self.y, self.x)
    }

    /// Polar angle in (-pi, pi].
    pub fn arg(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Self;
    fn mul(self, k: f64) -> Self {
        Self::new(self.x * k, self.y * k)
    }
}

impl Neg for Point2 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

/// A direction angle in radians.
///
/// The line `ℓ_θ = Rθ` only depends on [`Angle::value`], the angle reduced to
/// `[0, π)`. The direction vector keeps the orientation it was built with, so
/// that projections such as `⟨γ(s), θ⟩` for `θ = -π/4` keep their sign.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Angle(f64);

impl Angle {
    pub fn new(radians: f64) -> Self {
        Self(radians)
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    /// The line angle in `[0, π)`.
    pub fn value(self) -> f64 {
        let v = self.0.rem_euclid(PI);
        if v >= PI {
            0.0
        } else {
            v
        }
    }

    /// The same line with the canonical orientation.
    pub fn normalized(self) -> Self {
        Self(self.value())
    }

    pub fn direction(self) -> Point2 {
        Point2::new(self.0.cos(), self.0.sin())
    }

    pub fn perp(self) -> Point2 {
        Point2::new(-self.0.sin(), self.0.cos())
    }

    /// Whether both angles describe the same line.
    pub fn same_line(self, other: Angle) -> bool {
        let d = (self.value() - other.value()).abs();
        d < 1e-14 || (PI - d) < 1e-14
    }
}

/// One interval of a parameter domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamInterval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl ParamInterval {
    pub fn closed(lo: f64, hi: f64) -> Self {
        Self { lo, hi, lo_closed: true, hi_closed: true }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, s: f64) -> bool {
        (s > self.lo || (self.lo_closed && s == self.lo)) && (s < self.hi || (self.hi_closed && s == self.hi))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamDomain {
    pub intervals: Vec<ParamInterval>,
    /// Present iff the curve is closed.
    pub period: Option<f64>,
}

impl ParamDomain {
    pub fn contains(&self, s: f64) -> bool {
        if self.period.is_some() {
            return s.is_finite();
        }
        self.intervals.iter().any(|i| i.contains(s))
    }

    /// Reduces a closed-curve parameter into `[0, period)`.
    pub fn wrap(&self, s: f64) -> f64 {
        match self.period {
            Some(p) => {
                let w = s.rem_euclid(p);
                if w >= p {
                    0.0
                } else {
                    w
                }
            }
            None => s,
        }
    }

    pub fn total_length(&self) -> f64 {
        self.intervals.iter().map(ParamInterval::len).sum()
    }

    pub fn lo(&self) -> f64 {
        self.intervals[0].lo
    }

    pub fn hi(&self) -> f64 {
        self.intervals[self.intervals.len() - 1].hi
    }
}

/// Profile `ψ` of a graph curve `t ↦ (t, ψ(t))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PsiSpec {
    /// `|t|^α`, or `sign(t)|t|^α` when `signed`.
    Power {
        alpha: f64,
        #[serde(default)]
        signed: bool,
    },
    /// `Σ c_k t^k`, lowest degree first.
    Polynomial { coeffs: Vec<f64> },
    /// Natural cubic spline through the samples.
    Tabulated { t: Vec<f64>, values: Vec<f64> },
}

fn default_window() -> [f64; 2] {
    [-50.0, 50.0]
}

fn default_x_max() -> f64 {
    50.0
}

fn default_epsilon() -> f64 {
    0.02
}

fn default_sharpness() -> f64 {
    1.0
}

/// JSON-facing description of a curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CurveSpec {
    /// `c + R(rotation)(a cos 2πs, b sin 2πs)`.
    Ellipse {
        a: f64,
        b: f64,
        #[serde(default)]
        center: [f64; 2],
        #[serde(default)]
        rotation: f64,
    },
    Graph {
        psi: PsiSpec,
        #[serde(default = "default_window")]
        window: [f64; 2],
    },
    /// `(cot 2πs, 1/sin 2πs)`, truncated to `|cot 2πs| ≤ x_max`.
    HyperbolaStd {
        #[serde(default = "default_x_max")]
        x_max: f64,
    },
    /// Convex polygon, arc-length-proportional parameter on `[0, 1)`.
    Polygon { vertices: Vec<[f64; 2]> },
    /// Stadium made of two half circles joined by horizontal segments.
    Tube { theta1: f64, theta2: f64 },
    /// `(1 + χ(s))(cos 2πs, sin 2πs)` with `χ = ε sin(8πs) B(s)` on `(0, 1/4)`
    /// and the bump `B = exp(λ(1 − 1/(1 − u²)))`, `u = 8s − 1`, of height 1.
    PerturbedCircle {
        #[serde(default = "default_epsilon")]
        epsilon: f64,
        /// `λ`; 64 gives `exp(64 − 1/(s(1/4 − s)))`.
        #[serde(default = "default_sharpness")]
        sharpness: f64,
    },
}

impl CurveSpec {
    pub fn circle() -> Self {
        CurveSpec::Ellipse { a: 1.0, b: 1.0, center: [0.0, 0.0], rotation: 0.0 }
    }

    pub fn regular_polygon(n: usize) -> Self {
        let vertices = (0..n)
            .map(|k| {
                let a = TAU * k as f64 / n as f64;
                [a.cos(), a.sin()]
            })
            .collect();
        CurveSpec::Polygon { vertices }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurveError {
    #[error("parameter {s} is outside the curve domain")]
    OutOfDomain { s: f64 },
    #[error("derivative requested at corner parameter {s}")]
    DerivativeAtCorner { s: f64, left: Point2, right: Point2 },
    #[error("derivative is unbounded at parameter {s}")]
    Singular { s: f64 },
    #[error("curve is not convex: {0}")]
    NotConvex(String),
    #[error("invalid curve spec: {0}")]
    InvalidSpec(String),
    #[error("curve has no corners")]
    NoCorners,
    #[error("corner is not strict, its cones are empty")]
    NoCone,
}

/// Which one-sided limit to take at a break point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Debug)]
struct Spline {
    t: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl Spline {
    fn new(t: Vec<f64>, y: Vec<f64>) -> Result<Self, CurveError> {
        let n = t.len();
        if n < 3 || y.len() != n {
            return Err(CurveError::InvalidSpec("tabulated profile needs at least 3 matching samples".into()));
        }
        if t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CurveError::InvalidSpec("tabulated abscissae must increase".into()));
        }
        // Natural spline second derivatives via the tridiagonal system.
        let mut m = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = t[i] - t[i - 1];
            let h1 = t[i + 1] - t[i];
            let a = h0 / 6.0;
            let b = (h0 + h1) / 3.0;
            let cc = h1 / 6.0;
            let r = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
            let denom = b - a * c[i - 1];
            c[i] = cc / denom;
            d[i] = (r - a * d[i - 1]) / denom;
        }
        for i in (1..n - 1).rev() {
            m[i] = d[i] - c[i] * m[i + 1];
        }
        Ok(Self { t, y, m })
    }

    fn eval(&self, x: f64, order: u8) -> f64 {
        let n = self.t.len();
        let i = self.t.partition_point(|&ti| ti <= x).clamp(1, n - 1) - 1;
        let h = self.t[i + 1] - self.t[i];
        let a = (self.t[i + 1] - x) / h;
        let b = (x - self.t[i]) / h;
        let (mi, mj) = (self.m[i], self.m[i + 1]);
        match order {
            0 => a * self.y[i] + b * self.y[i + 1] + ((a * a * a - a) * mi + (b * b * b - b) * mj) * h * h / 6.0,
            1 => (self.y[i + 1] - self.y[i]) / h - (3.0 * a * a - 1.0) / 6.0 * h * mi + (3.0 * b * b - 1.0) / 6.0 * h * mj,
            _ => a * mi + b * mj,
        }
    }
}

#[derive(Clone, Debug)]
enum Psi {
    Power { alpha: f64, signed: bool },
    Poly(Vec<f64>),
    Spline(Spline),
}

impl Psi {
    fn eval(&self, t: f64, order: u8) -> f64 {
        match self {
            Psi::Power { alpha, signed } => {
                let a = *alpha;
                let sg = if t < 0.0 { -1.0 } else { 1.0 };
                let u = t.abs();
                // |t|^α, then the signed variant multiplies by sign(t).
                let (v0, v1, v2) = (
                    u.powf(a),
                    if u == 0.0 {
                        if a > 1.0 {
                            0.0
                        } else if a == 1.0 {
                            1.0
                        } else {
                            f64::INFINITY
                        }
                    } else {
                        a * u.powf(a - 1.0)
                    },
                    if u == 0.0 {
                        if a == 2.0 {
                            2.0
                        } else if a > 2.0 || a == 1.0 {
                            0.0
                        } else {
                            f64::INFINITY
                        }
                    } else {
                        a * (a - 1.0) * u.powf(a - 2.0)
                    },
                );
                match (order, signed) {
                    (0, false) => v0,
                    (0, true) => sg * v0,
                    (1, false) => sg * v1,
                    (1, true) => v1,
                    (_, false) => v2,
                    (_, true) => sg * v2,
                }
            }
            Psi::Poly(c) => {
                let mut acc = 0.0;
                for k in (order as usize..c.len()).rev() {
                    let mut f = 1.0;
                    for j in 0..order as usize {
                        f *= (k - j) as f64;
                    }
                    acc = acc * t + f * c[k];
                }
                acc
            }
            Psi::Spline(s) => s.eval(t, order),
        }
    }
}

#[derive(Clone, Debug)]
enum Shape {
    Ellipse { a: f64, b: f64, c: Point2, cr: f64, sr: f64 },
    Graph(Psi),
    Hyperbola,
    Polygon { verts: Vec<Point2>, knots: Vec<f64> },
    Tube { ell: f64 },
    Perturbed { eps: f64, lam: f64 },
}

/// An immutable parametrized plane curve.
#[derive(Clone, Debug)]
pub struct Curve {
    spec: CurveSpec,
    shape: Shape,
    domain: ParamDomain,
    smoothness: u32,
    corners: Vec<f64>,
    breaks: Vec<f64>,
}

impl Curve {
    pub fn new(spec: CurveSpec) -> Result<Self, CurveError> {
        let bad = |m: &str| Err(CurveError::InvalidSpec(m.to_string()));
        let period = Some(1.0);
        let unit = vec![ParamInterval { lo: 0.0, hi: 1.0, lo_closed: true, hi_closed: false }];
        let (shape, domain, smoothness, breaks) = match &spec {
            CurveSpec::Ellipse { a, b, center, rotation } => {
                if !(*a > 0.0 && *b > 0.0 && a.is_finite() && b.is_finite()) {
                    return bad("ellipse semi-axes must be positive");
                }
                let shape = Shape::Ellipse {
                    a: *a,
                    b: *b,
                    c: Point2::new(center[0], center[1]),
                    cr: rotation.cos(),
                    sr: rotation.sin(),
                };
                (shape, ParamDomain { intervals: unit, period }, SMOOTH, vec![])
            }
            CurveSpec::Graph { psi, window } => {
                if !(window[0] < window[1]) {
                    return bad("graph window must have lo < hi");
                }
                let (psi, smooth, breaks) = match psi {
                    PsiSpec::Power { alpha, signed } => {
                        if !(*alpha > 0.0) {
                            return bad("power exponent must be positive");
                        }
                        let integer = alpha.fract() == 0.0;
                        let odd = integer && (*alpha as i64) % 2 == 1;
                        let analytic = integer && (*signed == odd);
                        let smooth = if analytic { SMOOTH } else { alpha.floor().max(0.0) as u32 };
                        let inside = window[0] < 0.0 && window[1] > 0.0;
                        let breaks = if !analytic && inside { vec![0.0] } else { vec![] };
                        (Psi::Power { alpha: *alpha, signed: *signed }, smooth, breaks)
                    }
                    PsiSpec::Polynomial { coeffs } => {
                        if coeffs.is_empty() {
                            return bad("polynomial needs coefficients");
                        }
                        (Psi::Poly(coeffs.clone()), SMOOTH, vec![])
                    }
                    PsiSpec::Tabulated { t, values } => {
                        let s = Spline::new(t.clone(), values.clone())?;
                        if window[0] < t[0] || window[1] > t[t.len() - 1] {
                            return bad("graph window exceeds the tabulated range");
                        }
                        (Psi::Spline(s), 2, vec![])
                    }
                };
                let domain = ParamDomain { intervals: vec![ParamInterval::closed(window[0], window[1])], period: None };
                (Shape::Graph(psi), domain, smooth, breaks)
            }
            CurveSpec::HyperbolaStd { x_max } => {
                if !(*x_max > 0.0 && x_max.is_finite()) {
                    return bad("hyperbola window must be positive");
                }
                let s0 = (1.0 / x_max).atan() / TAU;
                let domain = ParamDomain {
                    intervals: vec![ParamInterval::closed(s0, 0.5 - s0), ParamInterval::closed(0.5 + s0, 1.0 - s0)],
                    period: None,
                };
                (Shape::Hyperbola, domain, SMOOTH, vec![])
            }
            CurveSpec::Polygon { vertices } => {
                let verts: Vec<Point2> = vertices.iter().map(|v| Point2::new(v[0], v[1])).collect();
                let knots = polygon_knots(&verts)?;
                let breaks = knots[..verts.len()].to_vec();
                (Shape::Polygon { verts, knots }, ParamDomain { intervals: unit, period }, 0, breaks)
            }
            CurveSpec::Tube { theta1, theta2 } => {
                if !(-PI / 2.0 < *theta1 && *theta1 < 0.0 && 0.0 < *theta2 && *theta2 < PI / 2.0) {
                    return bad("tube angles must satisfy -π/2 < θ₁ < 0 < θ₂ < π/2");
                }
                let ell = -2.0 * theta1.tan() + 2.0 * theta2.tan();
                if !(ell > 0.0) {
                    return bad("tube length must be positive");
                }
                let shape = Shape::Tube { ell };
                (shape, ParamDomain { intervals: unit, period }, 1, vec![0.0, 0.25, 0.5, 0.75])
            }
            CurveSpec::PerturbedCircle { epsilon, sharpness } => {
                if !(*epsilon > 0.0 && *epsilon < 0.5) {
                    return bad("perturbation amplitude must lie in (0, 1/2)");
                }
                if !(*sharpness > 0.0 && sharpness.is_finite()) {
                    return bad("bump sharpness must be positive");
                }
                let shape = Shape::Perturbed { eps: *epsilon, lam: *sharpness };
                (shape, ParamDomain { intervals: unit, period }, SMOOTH, vec![])
            }
        };
        let mut curve = Curve { spec, shape, domain, smoothness, corners: vec![], breaks };
        curve.corners = curve
            .breaks
            .iter()
            .copied()
            .filter(|&s| {
                let l = curve.raw(s, 1, Side::Left);
                let r = curve.raw(s, 1, Side::Right);
                tangent_angle(l, r) > CORNER_ANGLE
            })
            .collect();
        if let Shape::Perturbed { eps, lam } = curve.shape {
            check_perturbed(eps, lam)?;
        }
        Ok(curve)
    }

    pub fn circle() -> Self {
        Self::new(CurveSpec::circle()).expect("unit circle is valid")
    }

    pub fn spec(&self) -> &CurveSpec {
        &self.spec
    }

    pub fn domain(&self) -> &ParamDomain {
        &self.domain
    }

    pub fn is_closed(&self) -> bool {
        self.domain.period.is_some()
    }

    pub fn smoothness(&self) -> u32 {
        self.smoothness
    }

    /// Parameters where the unit tangent jumps.
    pub fn corners(&self) -> &[f64] {
        &self.corners
    }

    /// Parameters where some derivative may be discontinuous (corners,
    /// joints, profile singularities).
    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn is_polygon(&self) -> bool {
        matches!(self.shape, Shape::Polygon { .. })
    }

    /// Maximal sub-intervals of the domain on which the parametrization is
    /// smooth. For closed curves the intervals tile `[0, 1)`.
    pub fn segments(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for iv in &self.domain.intervals {
            let mut cuts: Vec<f64> = self.breaks.iter().copied().filter(|&b| b > iv.lo && b < iv.hi).collect();
            cuts.sort_by(f64::total_cmp);
            let mut lo = iv.lo;
            for c in cuts {
                out.push((lo, c));
                lo = c;
            }
            out.push((lo, iv.hi));
        }
        out
    }

    pub fn is_corner(&self, s: f64) -> bool {
        let s = self.domain.wrap(s);
        self.corners.iter().any(|&c| near_param(s, c, self.domain.period))
    }

    /// Position, first or second derivative at `s`.
    pub fn eval(&self, s: f64, order: u8) -> Result<Point2, CurveError> {
        if !self.domain.contains(s) {
            return Err(CurveError::OutOfDomain { s });
        }
        let w = self.domain.wrap(s);
        if order > 0 {
            if let Some(&c) = self.corners.iter().find(|&&c| near_param(w, c, self.domain.period)) {
                return Err(CurveError::DerivativeAtCorner {
                    s,
                    left: self.raw(c, order, Side::Left),
                    right: self.raw(c, order, Side::Right),
                });
            }
        }
        let v = self.raw(w, order, Side::Right);
        if !v.is_finite() {
            return Err(CurveError::Singular { s });
        }
        Ok(v)
    }

    /// One-sided evaluation; at smooth points both sides agree.
    pub fn eval_one_sided(&self, s: f64, order: u8, side: Side) -> Result<Point2, CurveError> {
        if !self.domain.contains(s) {
            return Err(CurveError::OutOfDomain { s });
        }
        Ok(self.raw(self.domain.wrap(s), order, side))
    }

    /// Unchecked position; `s` must lie in the domain (wrapped if closed).
    pub fn position(&self, s: f64) -> Point2 {
        self.raw(self.domain.wrap(s), 0, Side::Right)
    }

    /// Unchecked velocity, right-sided at break points.
    pub fn velocity(&self, s: f64) -> Point2 {
        self.raw(self.domain.wrap(s), 1, Side::Right)
    }

    pub fn velocity_side(&self, s: f64, side: Side) -> Point2 {
        self.raw(self.domain.wrap(s), 1, side)
    }

    /// `π_θγ(s) = ⟨γ(s), θ⟩`.
    pub fn projection(&self, theta: Angle, s: f64) -> Result<f64, CurveError> {
        Ok(self.eval(s, 0)?.dot(theta.direction()))
    }

    /// `⟨γ'(s), θ⟩`, right-sided at corners.
    pub fn projection_derivative(&self, theta: Angle, s: f64) -> f64 {
        self.velocity(s).dot(theta.direction())
    }

    /// A length scale of the (truncated) curve: max |γ| over a coarse sweep.
    pub fn scale(&self) -> f64 {
        let mut m: f64 = 1.0;
        for (a, b) in self.segments() {
            for i in 0..=64 {
                let s = a + (b - a) * i as f64 / 64.0;
                m = m.max(self.raw(s, 0, Side::Right).norm());
            }
        }
        m
    }

    /// Signed curvature `(x'y'' - y'x'') / |γ'|³`.
    pub fn curvature(&self, s: f64) -> Result<f64, CurveError> {
        let d1 = self.eval(s, 1)?;
        let d2 = self.eval(s, 2)?;
        Ok(d1.cross(d2) / d1.norm().powi(3))
    }

    fn raw(&self, s: f64, order: u8, side: Side) -> Point2 {
        match &self.shape {
            Shape::Ellipse { a, b, c, cr, sr } => {
                let u = TAU * s;
                let (sn, cs) = u.sin_cos();
                let p = match order {
                    0 => Point2::new(a * cs, b * sn),
                    1 => Point2::new(-a * sn, b * cs) * TAU,
                    _ => Point2::new(-a * cs, -b * sn) * (TAU * TAU),
                };
                let q = Point2::new(cr * p.x - sr * p.y, sr * p.x + cr * p.y);
                if order == 0 {
                    q + *c
                } else {
                    q
                }
            }
            Shape::Graph(psi) => match order {
                0 => Point2::new(s, psi.eval(s, 0)),
                1 => Point2::new(1.0, psi_side(psi, s, 1, side)),
                _ => Point2::new(0.0, psi_side(psi, s, 2, side)),
            },
            Shape::Hyperbola => {
                let u = TAU * s;
                let (sn, cs) = u.sin_cos();
                match order {
                    0 => Point2::new(cs / sn, 1.0 / sn),
                    1 => Point2::new(-TAU / (sn * sn), -TAU * cs / (sn * sn)),
                    _ => {
                        let k = TAU * TAU / (sn * sn * sn);
                        Point2::new(2.0 * k * cs, k * (1.0 + cs * cs))
                    }
                }
            }
            Shape::Polygon { verts, knots } => {
                let n = verts.len();
                let mut i = knots.partition_point(|&k| k <= s).clamp(1, n) - 1;
                if side == Side::Left && (s - knots[i]).abs() < 1e-15 {
                    i = (i + n - 1) % n;
                }
                let j = (i + 1) % n;
                let edge = verts[j] - verts[i];
                let dk = knots[i + 1] - knots[i];
                match order {
                    0 => {
                        let mut u = s - knots[i];
                        if u < 0.0 {
                            u += 1.0;
                        }
                        verts[i] + edge * (u / dk)
                    }
                    1 => edge * (1.0 / dk),
                    _ => Point2::default(),
                }
            }
            Shape::Tube { ell } => tube(*ell, s, order, side),
            Shape::Perturbed { eps, lam } => {
                let (chi, d1, d2) = chi(*eps, *lam, s);
                let u = TAU * s;
                let (sn, cs) = u.sin_cos();
                let radial = Point2::new(cs, sn);
                let tang = Point2::new(-sn, cs);
                let r = 1.0 + chi;
                match order {
                    0 => radial * r,
                    1 => radial * d1 + tang * (r * TAU),
                    _ => radial * (d2 - r * TAU * TAU) + tang * (2.0 * d1 * TAU),
                }
            }
        }
    }
}

fn psi_side(psi: &Psi, t: f64, order: u8, side: Side) -> f64 {
    if t == 0.0 && side == Side::Left {
        if let Psi::Power { signed, .. } = psi {
            // For |t|^α the odd derivatives flip sign on the left, for
            // sign(t)|t|^α the even ones do.
            let v = psi.eval(0.0, order);
            return if (order % 2 == 1) != *signed { -v } else { v };
        }
    }
    psi.eval(t, order)
}

fn tangent_angle(l: Point2, r: Point2) -> f64 {
    let dir = |p: Point2| {
        if p.is_finite() {
            p.normalized()
        } else {
            Point2::new(
                if p.x.is_infinite() { p.x.signum() } else { 0.0 },
                if p.y.is_infinite() { p.y.signum() } else { 0.0 },
            )
            .normalized()
        }
    };
    let (a, b) = (dir(l), dir(r));
    a.cross(b).atan2(a.dot(b)).abs()
}

fn near_param(s: f64, c: f64, period: Option<f64>) -> bool {
    let d = (s - c).abs();
    match period {
        Some(p) => d.min(p - d) < 1e-12,
        None => d < 1e-12,
    }
}

fn polygon_knots(verts: &[Point2]) -> Result<Vec<f64>, CurveError> {
    let n = verts.len();
    if n < 3 {
        return Err(CurveError::InvalidSpec("polygon needs at least 3 vertices".into()));
    }
    if verts.iter().any(|v| !v.is_finite()) {
        return Err(CurveError::InvalidSpec("polygon vertices must be finite".into()));
    }
    let lens: Vec<f64> = (0..n).map(|i| (verts[(i + 1) % n] - verts[i]).norm()).collect();
    if lens.iter().any(|&l| l <= 1e-14) {
        return Err(CurveError::InvalidSpec("polygon has a degenerate edge".into()));
    }
    let mut sign = 0.0;
    let mut turning = 0.0;
    for i in 0..n {
        let e0 = verts[(i + 1) % n] - verts[i];
        let e1 = verts[(i + 2) % n] - verts[(i + 1) % n];
        let c = e0.cross(e1);
        turning += c.atan2(e0.dot(e1));
        if c.abs() > 1e-14 * e0.norm() * e1.norm() {
            if sign == 0.0 {
                sign = c.signum();
            } else if c.signum() != sign {
                return Err(CurveError::NotConvex("polygon turns both ways".into()));
            }
        }
    }
    if (turning.abs() - TAU).abs() > 1e-6 {
        return Err(CurveError::NotConvex("polygon winds more than once".into()));
    }
    let total: f64 = lens.iter().sum();
    let mut knots = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    knots.push(0.0);
    for l in &lens[..n - 1] {
        acc += l;
        knots.push(acc / total);
    }
    knots.push(1.0);
    Ok(knots)
}

fn tube(ell: f64, t: f64, order: u8, side: Side) -> Point2 {
    let piece = if side == Side::Left && [0.0, 0.25, 0.5, 0.75].contains(&t) {
        if t == 0.0 {
            3
        } else {
            (t * 4.0) as usize - 1
        }
    } else {
        ((t * 4.0).floor() as usize).min(3)
    };
    let w = 4.0 * PI;
    let arc = |center: f64, phase: f64| {
        let u = w * (t - phase);
        let (sn, cs) = u.sin_cos();
        match order {
            0 => Point2::new(center + cs, sn),
            1 => Point2::new(-sn, cs) * w,
            _ => Point2::new(-cs, -sn) * (w * w),
        }
    };
    match piece {
        0 => arc(ell, 0.125),
        1 => match order {
            0 => Point2::new(ell * (2.0 - 4.0 * t), 1.0),
            1 => Point2::new(-4.0 * ell, 0.0),
            _ => Point2::default(),
        },
        2 => arc(0.0, 0.375),
        _ => match order {
            // The left limit at t = 0 is the end of the last segment, t = 1.
            0 => Point2::new(ell * (-3.0 + 4.0 * if t == 0.0 { 1.0 } else { t }), -1.0),
            1 => Point2::new(4.0 * ell, 0.0),
            _ => Point2::default(),
        },
    }
}

/// `χ, χ', χ''` of the perturbed circle at `s` (period 1).
fn chi(eps: f64, lam: f64, s: f64) -> (f64, f64, f64) {
    let s = s.rem_euclid(1.0);
    if s <= 0.0 || s >= 0.25 {
        return (0.0, 0.0, 0.0);
    }
    let u = 8.0 * s - 1.0;
    let w = 1.0 - u * u;
    let g = lam / w;
    if g - lam > 745.0 {
        return (0.0, 0.0, 0.0);
    }
    let g1 = 16.0 * lam * u / (w * w);
    let g2 = 128.0 * lam * (1.0 / (w * w) + 4.0 * u * u / (w * w * w));
    let b = (lam - g).exp();
    let b1 = -g1 * b;
    let b2 = (g1 * g1 - g2) * b;
    let k = 8.0 * PI;
    let (sn, cs) = (k * s).sin_cos();
    let (s0, s1, s2) = (sn, k * cs, -k * k * sn);
    (eps * s0 * b, eps * (s1 * b + s0 * b1), eps * (s2 * b + 2.0 * s1 * b1 + s0 * b2))
}

/// Checks the sign pattern of χ and the polar convexity condition
/// `r² + 2r'² − r r'' ≥ 0` (derivatives in the polar angle) on a dense grid.
fn check_perturbed(eps: f64, lam: f64) -> Result<(), CurveError> {
    let n = 20_000;
    for i in 1..n {
        let s = 0.25 * i as f64 / n as f64;
        let (x, x1, x2) = chi(eps, lam, s);
        if s < 0.125 && !(0.0..0.5).contains(&x) || s > 0.125 && x > 0.0 {
            return Err(CurveError::NotConvex(format!("sign pattern of χ fails at s = {s}")));
        }
        let r = 1.0 + x;
        let r1 = x1 / TAU;
        let r2 = x2 / (TAU * TAU);
        let k = r * r + 2.0 * r1 * r1 - r * r2;
        if k < 0.0 {
            return Err(CurveError::NotConvex(format!(
                "r² + 2r'² − r r'' = {k:.3e} < 0 at s = {s:.6}; reduce epsilon"
            )));
        }
    }
    Ok(())
}

/// The two cones at a corner and their duals.
///
/// The supporting line used is the one perpendicular to the bisector of the
/// interior angle, so both cones have half the exterior angle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CornerCones {
    pub s: f64,
    pub left_derivative: Point2,
    pub right_derivative: Point2,
    /// Vector-direction cones `(start, width)` in radians, counter-clockwise.
    pub c_plus: AngleInterval,
    pub c_minus: AngleInterval,
    /// Line-angle duals `{θ : θ^⊥ ∈ C}` as intervals modulo π.
    pub c_plus_dual: AngleInterval,
    pub c_minus_dual: AngleInterval,
}

/// An open arc `(start, start + width)` of angles. Membership is tested
/// modulo `modulus` (2π for vector cones, π for line angles).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleInterval {
    pub start: f64,
    pub width: f64,
    pub modulus: f64,
}

impl AngleInterval {
    pub fn contains(&self, angle: f64) -> bool {
        let d = (angle - self.start).rem_euclid(self.modulus);
        d > 0.0 && d < self.width
    }

    pub fn midpoint(&self) -> f64 {
        (self.start + 0.5 * self.width).rem_euclid(self.modulus)
    }
}

impl CornerCones {
    /// Builds the cones from the one-sided derivatives `γ'(s⁻)`, `γ'(s⁺)`.
    pub fn from_half_tangents(s: f64, left: Point2, right: Point2) -> Result<Self, CurveError> {
        let back = (-left).normalized();
        let fwd = right.normalized();
        if !back.is_finite() || !fwd.is_finite() {
            return Err(CurveError::NoCone);
        }
        let interior = back.cross(fwd).atan2(back.dot(fwd)).abs();
        if interior <= CORNER_ANGLE || interior >= PI - CORNER_ANGLE {
            return Err(CurveError::NoCone);
        }
        let bis = (back + fwd).normalized();
        let h_plus = if bis.perp().dot(back) > 0.0 { bis.perp() } else { -bis.perp() };
        let h_minus = -h_plus;
        let half = 0.5 * (PI - interior);
        let arc = |from: Point2, to: Point2| {
            let a0 = from.arg();
            let turn = from.cross(to).atan2(from.dot(to));
            if turn >= 0.0 {
                (a0, turn)
            } else {
                (a0 + turn, -turn)
            }
        };
        let (p0, pw) = arc(h_plus, back);
        let (m0, mw) = arc(h_minus, fwd);
        debug_assert!((pw - half).abs() < 1e-9 && (mw - half).abs() < 1e-9);
        let vec_cone = |start: f64, width: f64| AngleInterval { start: start.rem_euclid(TAU), width, modulus: TAU };
        let dual = |start: f64, width: f64| AngleInterval { start: (start - PI / 2.0).rem_euclid(PI), width, modulus: PI };
        Ok(Self {
            s,
            left_derivative: left,
            right_derivative: right,
            c_plus: vec_cone(p0, pw),
            c_minus: vec_cone(m0, mw),
            c_plus_dual: dual(p0, pw),
            c_minus_dual: dual(m0, mw),
        })
    }

    /// `θ ∈ C₊*`, i.e. `±θ^⊥ ∈ C₊`.
    pub fn plus_dual_contains(&self, theta: Angle) -> bool {
        self.c_plus_dual.contains(theta.value())
    }

    pub fn minus_dual_contains(&self, theta: Angle) -> bool {
        self.c_minus_dual.contains(theta.value())
    }

    /// The θ₂ interval that pairs with `theta1` at this corner, if `theta1`
    /// lies in one of the dual cones.
    pub fn admissible_theta2(&self, theta1: Angle) -> Option<AngleInterval> {
        if self.plus_dual_contains(theta1) {
            Some(self.c_minus_dual)
        } else if self.minus_dual_contains(theta1) {
            Some(self.c_plus_dual)
        } else {
            None
        }
    }
}

/// Cones at every strict corner of the curve.
pub fn corner_cones(curve: &Curve) -> Result<Vec<CornerCones>, CurveError> {
    let cones: Vec<CornerCones> = curve
        .corners()
        .iter()
        .filter_map(|&s| {
            let l = curve.raw(s, 1, Side::Left);
            let r = curve.raw(s, 1, Side::Right);
            CornerCones::from_half_tangents(s, l, r).ok()
        })
        .collect();
    if cones.is_empty() {
        return Err(CurveError::NoCorners);
    }
    Ok(cones)
}
