//! The composed map `Φ = Φ₂∘Φ₁`: circle lifts, rotation numbers, periodic
//! orbits and wandering / attractive interval certificates.
//!
//! Interval images are computed from endpoint images after checking that the
//! map is monotone on 17 interior samples. That is a cheap heuristic, not an
//! interval-arithmetic proof, and certificates say so through their evidence.

use std::fmt::Debug;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chordmap::{ChordError, ChordMap};
use crate::curve::{Angle, Curve};
use crate::par;
use crate::roots::solve_bracketed;

pub const DEFAULT_HORIZON: usize = 10_000;
pub const DEFAULT_PERIOD_CAP: usize = 64;
pub const BOUNDS_GRID: usize = 4096;
const MONOTONE_SAMPLES: usize = 17;
/// Iterations used for the internal rotation estimate of the periodic search.
const SEARCH_ITERATIONS: usize = 4096;
const SEARCH_GRID: usize = 256;
const NESTED_WIDTH: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("the curve is not closed")]
    NotClosedCurve,
    #[error("I₀ is not empty for angle {theta}")]
    NonEmptyI0 { theta: f64 },
    #[error("both angles define the same line")]
    SameAngle,
    #[error("the chord maps live on different curves")]
    DifferentCurves,
    #[error("composed map is not an orientation-preserving degree-one map")]
    NotDegreeOne,
    #[error("interval is degenerate")]
    DegenerateInterval,
    #[error("Φ^{j}(J) meets J")]
    Overlap { j: usize },
    #[error("Φ^{k}(J) is not contained in J")]
    NotContained { k: usize },
    #[error("hypotheses fail: {0}")]
    HypothesesFail(String),
    #[error(transparent)]
    Chord(#[from] ChordError),
}

/// A self-map of the unit circle in parameter coordinates `[0, 1)`.
pub trait CircleMap: Send + Sync + Debug {
    fn apply(&self, s: f64) -> Result<f64, DynamicsError>;
}

/// `Φ₂∘Φ₁` for two chord maps on the same closed curve.
#[derive(Clone, Debug)]
pub struct ComposedChords {
    pub first: ChordMap,
    pub second: ChordMap,
}

impl CircleMap for ComposedChords {
    fn apply(&self, s: f64) -> Result<f64, DynamicsError> {
        Ok(self.second.eval(self.first.eval(s)?)?)
    }
}

/// A real number kept as integer part plus fraction, so long lift orbits do
/// not lose the fractional digits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiftPoint {
    pub whole: i64,
    pub frac: f64,
}

impl LiftPoint {
    pub fn new(x: f64) -> Self {
        let w = x.floor();
        Self { whole: w as i64, frac: x - w }
    }

    pub fn value(self) -> f64 {
        self.whole as f64 + self.frac
    }

    /// `self − other` as a real number.
    pub fn minus(self, other: Self) -> f64 {
        (self.whole - other.whole) as f64 + (self.frac - other.frac)
    }
}

/// The lift `Φ̃: ℝ → ℝ`, normalized by `Φ̃(0) ∈ [0, 1)`.
#[derive(Clone, Debug)]
pub struct CircleMapLift {
    map: Arc<dyn CircleMap>,
    base: f64,
}

impl CircleMapLift {
    /// Builds the lift and checks it is increasing of degree one on a
    /// 256-point sweep.
    pub fn new(map: Arc<dyn CircleMap>) -> Result<Self, DynamicsError> {
        let base = map.apply(0.0)?;
        let lift = Self { map, base };
        let n = 256;
        let vals: Vec<Result<f64, DynamicsError>> = par::map_range(n + 1, |i| lift.eval(i as f64 / n as f64));
        let mut prev = f64::NEG_INFINITY;
        for v in vals {
            let v = v?;
            if v <= prev {
                return Err(DynamicsError::NotDegreeOne);
            }
            prev = v;
        }
        Ok(lift)
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn map(&self) -> &Arc<dyn CircleMap> {
        &self.map
    }

    /// `Φ̃(f) − Φ̃(0)` for `f ∈ [0, 1)`, in `[0, 1]`.
    fn offset(&self, f: f64) -> Result<f64, DynamicsError> {
        let y = self.map.apply(f)?;
        let mut d = (y - self.base).rem_euclid(1.0);
        // Rounding near the seam can put d on the wrong side of 0 ≡ 1.
        if f < 1e-6 && d > 1.0 - 1e-4 {
            d -= 1.0;
        } else if f > 1.0 - 1e-6 && d < 1e-4 {
            d += 1.0;
        }
        Ok(d)
    }

    pub fn eval(&self, x: f64) -> Result<f64, DynamicsError> {
        let n = x.floor();
        Ok(n + self.base + self.offset(x - n)?)
    }

    pub fn step(&self, p: LiftPoint) -> Result<LiftPoint, DynamicsError> {
        let y = self.base + self.offset(p.frac)?;
        let w = y.floor();
        Ok(LiftPoint { whole: p.whole + w as i64, frac: y - w })
    }

    /// `Φ̃^n(x0)` with the orbit kept in split form.
    pub fn iterate(&self, x0: f64, n: usize) -> Result<LiftPoint, DynamicsError> {
        let mut p = LiftPoint::new(x0);
        for _ in 0..n {
            p = self.step(p)?;
        }
        Ok(p)
    }
}

/// Maps whose orbits the certificates can follow.
pub trait OrbitMap: Sync {
    fn apply(&self, x: f64) -> Result<f64, DynamicsError>;
    /// `Some(1)` for lifts of circle maps, `None` for maps of an interval.
    fn period(&self) -> Option<f64>;
}

impl OrbitMap for CircleMapLift {
    fn apply(&self, x: f64) -> Result<f64, DynamicsError> {
        self.eval(x)
    }
    fn period(&self) -> Option<f64> {
        Some(1.0)
    }
}

/// `Φ₂∘Φ₁` on an open curve, as a map of the real parameter line.
#[derive(Clone, Debug)]
pub struct IntervalMap {
    pub first: ChordMap,
    pub second: ChordMap,
}

impl OrbitMap for IntervalMap {
    fn apply(&self, x: f64) -> Result<f64, DynamicsError> {
        Ok(self.second.eval(self.first.eval(x)?)?)
    }
    fn period(&self) -> Option<f64> {
        None
    }
}

/// Lift of `Φ = Φ₂∘Φ₁` (`map1` applied first).
pub fn compose_and_lift(map1: &ChordMap, map2: &ChordMap) -> Result<CircleMapLift, DynamicsError> {
    let curve = map1.curve();
    if !curve.is_closed() {
        return Err(DynamicsError::NotClosedCurve);
    }
    if !Arc::ptr_eq(curve, map2.curve()) && curve.spec() != map2.curve().spec() {
        return Err(DynamicsError::DifferentCurves);
    }
    if map1.theta().same_line(map2.theta()) {
        return Err(DynamicsError::SameAngle);
    }
    for m in [map1, map2] {
        let s = m.split();
        if s.i0.measure() > 1e-12 || !s.multi_fold.is_empty() {
            return Err(DynamicsError::NonEmptyI0 { theta: m.theta().radians() });
        }
    }
    CircleMapLift::new(Arc::new(ComposedChords { first: map1.clone(), second: map2.clone() }))
}

/// Convenience: chord maps for two angles on `curve`, composed and lifted.
pub fn lift_for_angles(curve: Arc<Curve>, theta1: Angle, theta2: Angle) -> Result<CircleMapLift, DynamicsError> {
    let m1 = ChordMap::new(curve.clone(), theta1)?;
    let m2 = ChordMap::new(curve, theta2)?;
    compose_and_lift(&m1, &m2)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub p: i64,
    pub q: usize,
    /// Orbit points in `[0, 1)`, in orbit order.
    pub points: Vec<f64>,
    /// `|Φ̃^q(x) − x − p|` at the first point.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationEstimate {
    /// `(Φ̃ⁿ(x₀) − x₀)/n` for the lift with `Φ̃(0) ∈ [0, 1)`.
    pub value: f64,
    pub n: usize,
    pub x0: f64,
    /// Displacement bounds `a ≤ Φ̃(x) − x ≤ b`, widened by the largest jump
    /// between neighbouring grid points.
    pub bounds: (f64, f64),
    /// Continued-fraction convergents `(p, q)` with `q ≤ 64`.
    pub convergents: Vec<(i64, i64)>,
    /// Smallest-denominator convergent within `1/n` of the estimate.
    pub rational_candidate: Option<(i64, i64)>,
    pub periodic_orbit_found: bool,
    pub periodic_orbit: Option<PeriodicOrbit>,
    pub max_period_searched: usize,
}

/// Continued-fraction convergents of `x` with denominators up to `max_q`.
pub fn convergents(x: f64, max_q: i64) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a.abs() > 1e15 {
            break;
        }
        let a = a as i64;
        let h = a * h1 + h0;
        let k = a * k1 + k0;
        if k > max_q {
            break;
        }
        out.push((h, k));
        (h0, h1, k0, k1) = (h1, h, k1, k);
        let f = r - a as f64;
        if f.abs() < 1e-15 {
            break;
        }
        r = 1.0 / f;
    }
    out
}

pub fn rotation_number(lift: &CircleMapLift, x0: f64, n: usize) -> Result<RotationEstimate, DynamicsError> {
    let n = n.max(1);
    let start = LiftPoint::new(x0);
    let end = lift.iterate(x0, n)?;
    let value = end.minus(start) / n as f64;

    let disp: Vec<Result<f64, DynamicsError>> = par::map_range(BOUNDS_GRID + 1, |i| {
        let x = i as f64 / BOUNDS_GRID as f64;
        Ok(lift.eval(x)? - x)
    });
    let disp: Vec<f64> = disp.into_iter().collect::<Result<_, _>>()?;
    let slack = disp.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
    let lo = disp.iter().copied().fold(f64::INFINITY, f64::min) - slack;
    let hi = disp.iter().copied().fold(f64::NEG_INFINITY, f64::max) + slack;

    let conv = convergents(value, DEFAULT_PERIOD_CAP as i64);
    let tol = 1.0 / n as f64 + 1e-12;
    let rational_candidate = conv.iter().copied().find(|&(p, q)| (value - p as f64 / q as f64).abs() <= tol);
    let orbit = detect_periodic_orbit(lift, DEFAULT_PERIOD_CAP, 1e-9)?;
    Ok(RotationEstimate {
        value,
        n,
        x0,
        bounds: (lo, hi),
        convergents: conv,
        rational_candidate,
        periodic_orbit_found: orbit.is_some(),
        periodic_orbit: orbit,
        max_period_searched: DEFAULT_PERIOD_CAP,
    })
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Searches for a point with `Φ̃^q(x) = x + p` over all reduced `p/q` with
/// `q ≤ max_period` within `1/4096` of the rotation estimate, scanning the
/// displacement for zeros and sign changes.
pub fn detect_periodic_orbit(
    lift: &CircleMapLift,
    max_period: usize,
    tol: f64,
) -> Result<Option<PeriodicOrbit>, DynamicsError> {
    let est = lift.iterate(0.0, SEARCH_ITERATIONS)?.value() / SEARCH_ITERATIONS as f64;
    let window = 1.0 / SEARCH_ITERATIONS as f64 + 1e-12;
    let mut cands = Vec::new();
    for q in 1..=max_period.max(1) as i64 {
        let lo = ((est - window) * q as f64).ceil() as i64;
        let hi = ((est + window) * q as f64).floor() as i64;
        for p in lo..=hi {
            if gcd(p, q) == 1 {
                cands.push((p, q as usize));
            }
        }
    }
    for (p, q) in cands {
        let g = |x: f64| -> Result<f64, DynamicsError> { Ok(lift.iterate(x, q)?.value() - x - p as f64) };
        let xs: Vec<f64> = (0..=SEARCH_GRID).map(|i| i as f64 / SEARCH_GRID as f64).collect();
        let gs: Vec<Result<f64, DynamicsError>> = par::map_slice(&xs, |&x| g(x));
        let gs: Vec<f64> = gs.into_iter().collect::<Result<_, _>>()?;
        let mut hit = None;
        for i in 0..SEARCH_GRID {
            if gs[i].abs() <= tol {
                hit = Some(xs[i]);
                break;
            }
            if gs[i].signum() != gs[i + 1].signum() {
                let gg = |x: f64| g(x).unwrap_or(f64::NAN);
                let r = solve_bracketed(gg, xs[i], xs[i + 1], gs[i], gs[i + 1], 0.0);
                if g(r)?.abs() <= tol.max(1e-12) {
                    hit = Some(r);
                    break;
                }
            }
        }
        if let Some(x) = hit {
            let mut points = Vec::with_capacity(q);
            let mut pt = LiftPoint::new(x);
            for _ in 0..q {
                points.push(pt.frac);
                pt = lift.step(pt)?;
            }
            let residual = g(x)?.abs();
            return Ok(Some(PeriodicOrbit { p, q, points, residual }));
        }
    }
    Ok(None)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    Wandering,
    Attractive,
    Periodic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Horizon {
    /// Disjointness checked for `1 ≤ j ≤ steps`.
    Finite { steps: usize },
    /// Disjointness for all `j`, by the stated argument.
    Infinite { reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalCertificate {
    pub kind: CertificateKind,
    pub interval: (f64, f64),
    pub horizon: Option<Horizon>,
    pub period: Option<usize>,
    /// Whether every sampled image step was monotone.
    pub monotone: bool,
    /// The first few images `Φ^j(J)` (lift coordinates).
    pub orbit: Vec<(f64, f64)>,
    /// Step at which the orbit left the map's domain, if it did.
    pub escaped_at: Option<usize>,
    pub nested_limit: Option<f64>,
    pub final_width: Option<f64>,
    pub lower_increasing: Option<bool>,
    pub upper_decreasing: Option<bool>,
}

impl IntervalCertificate {
    fn blank(kind: CertificateKind, j: (f64, f64)) -> Self {
        Self {
            kind,
            interval: j,
            horizon: None,
            period: None,
            monotone: true,
            orbit: Vec::new(),
            escaped_at: None,
            nested_limit: None,
            final_width: None,
            lower_increasing: None,
            upper_decreasing: None,
        }
    }

    /// Certificate for an orbit found by [`detect_periodic_orbit`].
    pub fn periodic(orbit: &PeriodicOrbit) -> Self {
        let x = orbit.points[0];
        let mut c = Self::blank(CertificateKind::Periodic, (x, x));
        c.period = Some(orbit.q);
        c.orbit = orbit.points.iter().map(|&p| (p, p)).collect();
        c
    }
}

const ORBIT_RECORD: usize = 64;

/// Endpoint image of `[a, b]` plus a monotonicity check on interior samples.
/// Returns the image, whether the map was monotone, and whether increasing.
fn image(map: &dyn OrbitMap, (a, b): (f64, f64)) -> Result<((f64, f64), bool, bool), DynamicsError> {
    let n = MONOTONE_SAMPLES + 1;
    let mut vals = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let x = a + (b - a) * i as f64 / n as f64;
        vals.push(map.apply(x)?);
    }
    let inc = vals.windows(2).all(|w| w[1] > w[0]);
    let dec = vals.windows(2).all(|w| w[1] < w[0]);
    let (fa, fb) = (vals[0], vals[n]);
    Ok(((fa.min(fb), fa.max(fb)), inc || dec, inc))
}

fn overlap_len(x: (f64, f64), y: (f64, f64)) -> f64 {
    x.1.min(y.1) - x.0.max(y.0)
}

/// Overlap of `img` with `J` modulo the period.
fn meets(img: (f64, f64), j: (f64, f64), period: Option<f64>, tol: f64) -> bool {
    match period {
        None => overlap_len(img, j) > tol,
        Some(p) => {
            let k = ((img.0 + img.1 - j.0 - j.1) / (2.0 * p)).round();
            (-1..=1).any(|d| {
                let sh = (k + d as f64) * p;
                overlap_len((img.0 - sh, img.1 - sh), j) > tol
            })
        }
    }
}

/// Whether an increasing lift traps the orbit of `J` between `J` and a
/// fixed point of `Φ̃ − m` less than one period away.
///
/// Fixed points at corners are often touching zeros of `Φ̃(x) − m − x`, so
/// local minima of `|Φ̃(x) − m − x|` on the scan are refined as well.
fn trapped_by_fixed_point(map: &dyn OrbitMap, j: (f64, f64), first: (f64, f64)) -> Result<Option<f64>, DynamicsError> {
    let m = (first.0 - j.0).round();
    let moved = (first.0 - m, first.1 - m);
    let (from, to) = if moved.0 >= j.1 {
        (j.1, j.0 + 1.0)
    } else if moved.1 <= j.0 {
        (j.0, j.1 - 1.0)
    } else {
        return Ok(None);
    };
    let sign = if to > from { 1.0 } else { -1.0 };
    // Displacement towards the fixed point; it starts positive.
    let g = |x: f64| -> Result<f64, DynamicsError> { Ok(sign * (map.apply(x)? - m - x)) };
    let n = 1024;
    let xs: Vec<f64> = (0..=n).map(|i| from + (to - from) * i as f64 / n as f64).collect();
    let gs: Vec<f64> = xs.iter().map(|&x| g(x)).collect::<Result<_, _>>()?;
    for i in 0..=n {
        if gs[i] <= 1e-13 {
            return Ok(Some(xs[i]));
        }
        if i > 0 && i < n && gs[i] <= gs[i - 1] && gs[i] <= gs[i + 1] {
            let (x, v) = golden_min(|x| g(x).unwrap_or(f64::INFINITY), xs[i - 1], xs[i + 1]);
            if v <= 1e-12 {
                return Ok(Some(x));
            }
        }
    }
    Ok(None)
}

fn golden_min<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (a.min(b), a.max(b));
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if b - a <= 4.0 * f64::EPSILON * a.abs().max(b.abs()).max(1.0) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Checks `Φ^j(J) ∩ J = ∅` for `1 ≤ j ≤ horizon` (modulo the period for
/// lifts), upgrading to an infinite horizon when `Φ` is increasing on `J`,
/// `Φ(J)` lies strictly on one side of `J`, and, for lifts, a fixed point
/// closes off the orbit within one period.
pub fn certify_wandering(
    map: &dyn OrbitMap,
    j: (f64, f64),
    horizon: usize,
) -> Result<IntervalCertificate, DynamicsError> {
    if !(j.1 > j.0) {
        return Err(DynamicsError::DegenerateInterval);
    }
    let tol = 1e-12 * (1.0 + j.0.abs().max(j.1.abs()));
    let mut cert = IntervalCertificate::blank(CertificateKind::Wandering, j);
    let mut infinite = None;
    let mut cur = j;
    let mut completed = 0;
    for step in 1..=horizon {
        let (img, mono, inc) = match image(map, cur) {
            Ok(v) => v,
            Err(_) => {
                cert.escaped_at = Some(step);
                break;
            }
        };
        cert.monotone &= mono;
        if step == 1 && mono && inc {
            let one_side = img.0 >= j.1 - tol || img.1 <= j.0 + tol;
            match map.period() {
                None if one_side => {
                    infinite = Some("increasing map moves J strictly to one side, so images stay ordered".to_string());
                }
                Some(_) => {
                    let m = (img.0 - j.0).round();
                    let moved = (img.0 - m, img.1 - m);
                    if moved.0 >= j.1 - tol || moved.1 <= j.0 + tol {
                        if let Some(x) = trapped_by_fixed_point(map, j, img)? {
                            infinite = Some(format!(
                                "increasing lift moves J to one side and the fixed point {x:.12} of Φ̃ − {m} bounds the orbit within one period"
                            ));
                        }
                    }
                }
                None => {}
            }
        }
        if meets(img, j, map.period(), tol) {
            return Err(DynamicsError::Overlap { j: step });
        }
        if cert.orbit.len() < ORBIT_RECORD {
            cert.orbit.push(img);
        }
        cur = img;
        completed = step;
    }
    cert.horizon = Some(match infinite {
        Some(reason) => Horizon::Infinite { reason },
        None => Horizon::Finite { steps: completed },
    });
    Ok(cert)
}

fn image_k(map: &dyn OrbitMap, j: (f64, f64), k: usize) -> Result<((f64, f64), bool), DynamicsError> {
    let mut cur = j;
    let mut mono = true;
    for _ in 0..k {
        let (img, m, _) = image(map, cur)?;
        mono &= m;
        cur = img;
    }
    Ok((cur, mono))
}

/// Checks `Φ^k(J) ⊂ J` (modulo an integer shift for lifts) and follows the
/// nested images until their width drops below `1e-8` or `n_limit` rounds.
pub fn certify_attractive(
    map: &dyn OrbitMap,
    j: (f64, f64),
    k: usize,
    n_limit: usize,
) -> Result<IntervalCertificate, DynamicsError> {
    if !(j.1 > j.0) || k == 0 {
        return Err(DynamicsError::DegenerateInterval);
    }
    let tol = 1e-12;
    let (img, mono) = image_k(map, j, k)?;
    let shift = match map.period() {
        Some(p) => (((img.0 + img.1) - (j.0 + j.1)) / (2.0 * p)).round() * p,
        None => 0.0,
    };
    let mut cur = (img.0 - shift, img.1 - shift);
    if !(cur.0 >= j.0 - tol && cur.1 <= j.1 + tol) {
        return Err(DynamicsError::NotContained { k });
    }
    let mut cert = IntervalCertificate::blank(CertificateKind::Attractive, j);
    cert.period = Some(k);
    cert.monotone = mono;
    cert.orbit.push(cur);
    let (mut lower_inc, mut upper_dec) = (cur.0 >= j.0 - tol, cur.1 <= j.1 + tol);
    for _ in 1..n_limit {
        if cur.1 - cur.0 < NESTED_WIDTH {
            break;
        }
        let (next, m) = image_k(map, cur, k)?;
        cert.monotone &= m;
        let next = (next.0 - shift, next.1 - shift);
        lower_inc &= next.0 >= cur.0 - 1e-15;
        upper_dec &= next.1 <= cur.1 + 1e-15;
        if cert.orbit.len() < ORBIT_RECORD {
            cert.orbit.push(next);
        }
        cur = next;
    }
    let width = cur.1 - cur.0;
    cert.final_width = Some(width);
    cert.nested_limit = (width < NESTED_WIDTH).then_some(0.5 * (cur.0 + cur.1));
    cert.lower_increasing = Some(lower_inc);
    cert.upper_decreasing = Some(upper_dec);
    Ok(cert)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaSequence {
    pub sigma0: f64,
    /// `σ₁, σ₂, …`
    pub values: Vec<f64>,
    pub strictly_increasing: bool,
    pub strictly_decreasing: bool,
    /// Smallest `|σ_{k+1} − σ_k|`; bounded away from 0 rules out a finite
    /// accumulation point within the run.
    pub min_increment: f64,
    /// Step at which a partner fell outside the truncation window.
    pub escaped_at: Option<usize>,
}

fn single_extremum(curve: &Curve, theta: Angle) -> Result<f64, DynamicsError> {
    let split = crate::chordmap::projection_split(curve, theta)?;
    if curve.is_closed() || split.critical_set.len() != 1 || split.pieces.len() != 2 || split.fold_count != 2 {
        return Err(DynamicsError::HypothesesFail(format!(
            "projection for θ = {} does not have a unique local extremum",
            theta.radians()
        )));
    }
    Ok(split.critical_set[0])
}

/// The orbit `σ₁ = Φ₂(σ₀)`, `σ_{k+1} = Φ₂(Φ₁(σ_k))` on a graph curve.
pub fn sigma_sequence(
    curve: Arc<Curve>,
    theta1: Angle,
    theta2: Angle,
    sigma0: Option<f64>,
    n: usize,
) -> Result<SigmaSequence, DynamicsError> {
    let c1 = single_extremum(&curve, theta1)?;
    single_extremum(&curve, theta2)?;
    let m1 = ChordMap::new(curve.clone(), theta1)?;
    let m2 = ChordMap::new(curve, theta2)?;
    let s0 = sigma0.unwrap_or(c1);
    let mut values = Vec::with_capacity(n);
    let mut escaped_at = None;
    let mut cur = match m2.eval(s0) {
        Ok(v) => v,
        Err(_) => {
            return Err(DynamicsError::HypothesesFail("σ₀ has no partner for θ₂".into()));
        }
    };
    values.push(cur);
    for k in 1..n {
        match m1.eval(cur).and_then(|x| m2.eval(x)) {
            Ok(v) => {
                cur = v;
                values.push(v);
            }
            Err(_) => {
                escaped_at = Some(k + 1);
                break;
            }
        }
    }
    let inc = values.windows(2).all(|w| w[1] > w[0]);
    let dec = values.windows(2).all(|w| w[1] < w[0]);
    let min_increment = values.windows(2).map(|w| (w[1] - w[0]).abs()).fold(f64::INFINITY, f64::min);
    Ok(SigmaSequence {
        sigma0: s0,
        values,
        strictly_increasing: inc,
        strictly_decreasing: dec,
        min_increment,
        escaped_at,
    })
}

/// Orbit `x, Φ(x), …` of length `n + 1` for any orbit map.
pub fn orbit(map: &dyn OrbitMap, x0: f64, n: usize) -> Vec<f64> {
    let mut out = vec![x0];
    let mut x = x0;
    for _ in 0..n {
        match map.apply(x) {
            Ok(y) => {
                out.push(y);
                x = y;
            }
            Err(_) => break,
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{CurveSpec, PsiSpec};
    use std::f64::consts::PI;

    fn circle_lift(t2: f64) -> CircleMapLift {
        lift_for_angles(Arc::new(Curve::circle()), Angle::new(0.0), Angle::new(t2)).unwrap()
    }

    #[test]
    fn circle_is_translation() {
        let l = circle_lift(1.0);
        for x in [0.0, 0.2, 0.77, 3.4] {
            assert!((l.eval(x).unwrap() - x - 1.0 / PI).abs() < 1e-14);
        }
    }

    #[test]
    fn same_angle_rejected() {
        let c = Arc::new(Curve::circle());
        let e = lift_for_angles(c, Angle::new(0.4), Angle::new(0.4 + PI)).unwrap_err();
        assert_eq!(e, DynamicsError::SameAngle);
    }

    #[test]
    fn convergents_of_pi_inverse() {
        let c = convergents(1.0 / PI, 64);
        assert_eq!(c, vec![(0, 1), (1, 3), (7, 22)]);
    }

    #[test]
    fn circle_rotation_numbers() {
        let r = rotation_number(&circle_lift(1.0), 0.0, 100_000).unwrap();
        assert!((r.value - 1.0 / PI).abs() < 1e-12);
        assert!(!r.periodic_orbit_found);
        assert!(r.rational_candidate.is_none());
        assert!(r.bounds.0 <= r.value && r.value <= r.bounds.1);
        let r = rotation_number(&circle_lift(PI / 3.0), 0.0, 1000).unwrap();
        assert!((r.value - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.rational_candidate, Some((1, 3)));
        assert_eq!(r.periodic_orbit.unwrap().q, 3);
    }

    #[test]
    fn golden_rotation_has_no_orbit() {
        let g = (5f64.sqrt() - 1.0) / 2.0;
        assert!(detect_periodic_orbit(&circle_lift(PI * g), 64, 1e-9).unwrap().is_none());
    }

    #[test]
    fn rational_circle_overlaps() {
        let l = circle_lift(PI / 2.0);
        let e = certify_wandering(&l, (0.1, 0.2), 100).unwrap_err();
        assert!(matches!(e, DynamicsError::Overlap { j: 1 | 2 }));
    }

    #[test]
    fn irrational_circle_never_attractive() {
        let l = circle_lift(1.0);
        for k in 1..=64 {
            assert!(matches!(certify_attractive(&l, (0.3, 0.4), k, 10), Err(DynamicsError::NotContained { .. })));
        }
    }

    #[test]
    fn parabola_sigma_is_arithmetic() {
        let c = Arc::new(Curve::new(CurveSpec::Graph { psi: PsiSpec::Power { alpha: 2.0, signed: false }, window: [-50.0, 50.0] }).unwrap());
        let th2 = (-4.0f64).atan().rem_euclid(PI); // cot θ₂ = −1/4
        let seq = sigma_sequence(c, Angle::new(-PI / 2.0), Angle::new(th2), None, 100).unwrap();
        assert_eq!(seq.values.len(), 100);
        assert!(seq.strictly_increasing);
        for (k, v) in seq.values.iter().enumerate() {
            assert!((v - 0.25 * (k + 1) as f64).abs() < 1e-9, "σ_{} = {v}", k + 1);
        }
    }
}
