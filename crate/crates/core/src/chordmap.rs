//! Level sets of `π_θγ` and the chord involution `Φ_θ`.
//!
//! The projection `s ↦ ⟨γ(s), θ⟩` is cut at its critical points into strictly
//! monotone pieces. A value covered by one piece has a unique preimage (the
//! set `I₀`); a value covered by two pieces pairs one parameter in `I₋` with
//! one in `I₊`, and `Φ_θ` swaps them.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curve::{Angle, Curve, CurveError, Side};
use crate::intervals::IntervalSet;
use crate::roots::{solve_bracketed, solve_newton_bracketed};

/// Samples per smooth segment when locating critical points.
const CRITICAL_SAMPLES: usize = 1024;

/// `|π'| / |γ'|` below which the reflection model replaces the root solve.
pub const TANGENCY_SWITCH: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChordError {
    #[error("parameter {s} has a unique preimage (I₀)")]
    InI0 { s: f64 },
    #[error("parameter {s} has more than one partner; use the cusp maps")]
    MultiFold { s: f64 },
    #[error("edge ({lo}, {hi}) is orthogonal to θ")]
    FaceNormalToTheta { lo: f64, hi: f64 },
    #[error("θ is not in the three-fold regime")]
    NotCuspRegime,
    #[error("projection has no critical structure on a closed curve")]
    Degenerate,
    #[error(transparent)]
    Curve(#[from] CurveError),
}

/// A maximal parameter interval on which `π_θγ` is strictly monotone.
///
/// For closed curves `lo`/`hi` are lifted, so `hi` may exceed 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    /// +1 increasing, -1 decreasing.
    pub sign: i8,
    pub value_lo: f64,
    pub value_hi: f64,
}

impl Piece {
    pub fn min_value(&self) -> f64 {
        self.value_lo.min(self.value_hi)
    }

    pub fn max_value(&self) -> f64 {
        self.value_lo.max(self.value_hi)
    }

    fn covers(&self, z: f64, tol: f64) -> bool {
        z >= self.min_value() - tol && z <= self.max_value() + tol
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionSplit {
    pub theta: Angle,
    pub pieces: Vec<Piece>,
    pub critical_set: Vec<f64>,
    pub i0: IntervalSet,
    pub i_minus: IntervalSet,
    pub i_plus: IntervalSet,
    /// Parameters whose value is hit three or more times.
    pub multi_fold: IntervalSet,
    pub fold_count: usize,
    period: Option<f64>,
    value_tol: f64,
}

impl ProjectionSplit {
    /// Index of the piece containing the (lifted) parameter `x`.
    fn piece_of(&self, x: f64) -> Option<usize> {
        let i = self.pieces.partition_point(|p| p.hi < x);
        if i < self.pieces.len() && self.pieces[i].lo <= x {
            Some(i)
        } else {
            None
        }
    }

    /// Lifts a closed-curve parameter into the window of the pieces.
    fn lift(&self, s: f64) -> f64 {
        match self.period {
            Some(p) => {
                let base = self.pieces[0].lo;
                base + (s - base).rem_euclid(p)
            }
            None => s,
        }
    }

    fn unlift(&self, x: f64) -> f64 {
        match self.period {
            Some(p) => {
                let w = x.rem_euclid(p);
                if w >= p {
                    0.0
                } else {
                    w
                }
            }
            None => x,
        }
    }

    /// Parameters paired by the chord map.
    pub fn paired(&self) -> IntervalSet {
        self.i_minus.union(&self.i_plus)
    }

    /// Distinct projection values of the critical points.
    pub fn critical_values(&self, curve: &Curve) -> Vec<f64> {
        let dir = self.theta.direction();
        let mut v: Vec<f64> = self.critical_set.iter().map(|&c| curve.position(c).dot(dir)).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Values where the number of preimages can change: critical values
    /// and the values at open-curve domain ends.
    pub fn value_breakpoints(&self) -> Vec<f64> {
        let mut z: Vec<f64> = self.pieces.iter().flat_map(|p| [p.value_lo, p.value_hi]).collect();
        z.sort_by(f64::total_cmp);
        z.dedup_by(|a, b| (*a - *b).abs() <= self.value_tol);
        z
    }
}

fn projection_at(curve: &Curve, dir: crate::curve::Point2, x: f64) -> f64 {
    curve.position(x).dot(dir)
}

/// Splits the domain into monotone pieces of `π_θγ` and classifies the
/// preimage multiplicity.
pub fn projection_split(curve: &Curve, theta: Angle) -> Result<ProjectionSplit, ChordError> {
    let dir = theta.direction();
    let period = curve.domain().period;
    let segments = curve.segments();
    let scale = curve.scale();
    let value_tol = 1e-13 * scale;

    let dp = |s: f64, side: Side| curve.velocity_side(s, side).dot(dir);
    let mut critical = Vec::new();
    // Sign of π' just inside each end of each segment.
    let mut end_signs: Vec<(f64, f64)> = Vec::with_capacity(segments.len());

    for &(a, b) in &segments {
        let len = b - a;
        let delta = 1e-10 * len;
        let n = CRITICAL_SAMPLES;
        let xs: Vec<f64> = (0..=n)
            .map(|i| match i {
                0 => a + delta,
                i if i == n => b - delta,
                i => a + len * i as f64 / n as f64,
            })
            .collect();
        let vals: Vec<f64> = xs.iter().map(|&x| dp(x, Side::Right)).collect();
        let flat = xs
            .iter()
            .zip(&vals)
            .all(|(&x, &v)| v.abs() <= 1e-12 * curve.velocity(x).norm());
        if flat {
            return Err(ChordError::FaceNormalToTheta { lo: a, hi: b });
        }
        let mut last: Option<(usize, f64)> = None;
        for (i, &v) in vals.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            if let Some((j, w)) = last {
                if w.signum() != v.signum() {
                    let root = if j + 1 == i {
                        solve_bracketed(|x| dp(x, Side::Right), xs[j], xs[i], w, v, 0.0)
                    } else {
                        0.5 * (xs[j + 1] + xs[i - 1])
                    };
                    critical.push(root);
                }
            }
            last = Some((i, v));
        }
        end_signs.push((vals[0].signum(), vals[n].signum()));
    }

    // Sign changes across segment boundaries (corners, joints, the seam of a
    // closed curve).
    let nseg = segments.len();
    let boundaries: Vec<(usize, usize)> = match period {
        Some(_) => (0..nseg).map(|k| (k, (k + 1) % nseg)).collect(),
        None => (0..nseg.saturating_sub(1))
            .filter(|&k| segments[k].1 == segments[k + 1].0)
            .map(|k| (k, k + 1))
            .collect(),
    };
    for (k, next) in boundaries {
        let left = end_signs[k].1;
        let right = end_signs[next].0;
        if left == right {
            continue;
        }
        let b = segments[k].1;
        let is_break = curve.breaks().iter().any(|&c| (curve.domain().wrap(b) - c).abs() < 1e-14);
        let c = if is_break {
            b
        } else {
            // Smooth seam: the zero sits within delta of b.
            let delta = 1e-10 * (segments[k].1 - segments[k].0);
            let (lo, hi) = (b - delta, b + delta);
            solve_bracketed(|x| dp(x, Side::Right), lo, hi, dp(lo, Side::Right), dp(hi, Side::Right), 0.0)
        };
        critical.push(curve.domain().wrap(c));
    }
    critical.sort_by(f64::total_cmp);
    critical.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
    if let Some(p) = period {
        if critical.len() >= 2 && (critical[0] + p - critical[critical.len() - 1]).abs() < 1e-13 {
            critical.pop();
        }
    }

    // Monotone pieces.
    let mut bounds: Vec<(f64, f64)> = Vec::new();
    match period {
        Some(p) => {
            if critical.len() < 2 {
                return Err(ChordError::Degenerate);
            }
            for k in 0..critical.len() {
                let lo = critical[k];
                let hi = if k + 1 < critical.len() { critical[k + 1] } else { critical[0] + p };
                bounds.push((lo, hi));
            }
        }
        None => {
            for iv in &curve.domain().intervals {
                let mut lo = iv.lo;
                for &c in critical.iter().filter(|&&c| c > iv.lo && c < iv.hi) {
                    bounds.push((lo, c));
                    lo = c;
                }
                bounds.push((lo, iv.hi));
            }
        }
    }
    let pieces: Vec<Piece> = bounds
        .iter()
        .map(|&(lo, hi)| {
            let value_lo = projection_at(curve, dir, lo);
            let value_hi = projection_at(curve, dir, hi);
            let sign = if value_hi >= value_lo { 1 } else { -1 };
            Piece { lo, hi, sign, value_lo, value_hi }
        })
        .collect();

    // Multiplicity over elementary value intervals.
    let mut z: Vec<f64> = pieces.iter().flat_map(|p| [p.value_lo, p.value_hi]).collect();
    z.sort_by(f64::total_cmp);
    z.dedup_by(|a, b| (*a - *b).abs() <= value_tol);
    let mut i0 = Vec::new();
    let mut im = Vec::new();
    let mut ip = Vec::new();
    let mut multi = Vec::new();
    let mut fold = if pieces.is_empty() { 0 } else { 1 };
    for w in z.windows(2) {
        let (z0, z1) = (w[0], w[1]);
        let cover: Vec<usize> = (0..pieces.len())
            .filter(|&i| pieces[i].min_value() <= z0 + value_tol && pieces[i].max_value() >= z1 - value_tol)
            .collect();
        fold = fold.max(cover.len());
        let sub = |i: usize| {
            let p = &pieces[i];
            let a = invert_on_piece(curve, dir, p, z0);
            let b = invert_on_piece(curve, dir, p, z1);
            (a.min(b), a.max(b))
        };
        match cover.len() {
            0 => {}
            1 => i0.push(sub(cover[0])),
            2 => {
                im.push(sub(cover[0]));
                ip.push(sub(cover[1]));
            }
            _ => cover.iter().for_each(|&i| multi.push(sub(i))),
        }
    }
    let wrap = |v: Vec<(f64, f64)>| {
        let set = IntervalSet::new(v);
        match period {
            Some(p) => set.wrapped(0.0, p),
            None => set,
        }
    };
    Ok(ProjectionSplit {
        theta,
        pieces,
        critical_set: critical,
        i0: wrap(i0),
        i_minus: wrap(im),
        i_plus: wrap(ip),
        multi_fold: wrap(multi),
        fold_count: fold,
        period,
        value_tol,
    })
}

/// Preimage of `z` on a monotone piece, snapping to the ends.
fn invert_on_piece(curve: &Curve, dir: crate::curve::Point2, p: &Piece, z: f64) -> f64 {
    let tol = 1e-15 * (1.0 + z.abs());
    if (z - p.value_lo).abs() <= tol {
        return p.lo;
    }
    if (z - p.value_hi).abs() <= tol {
        return p.hi;
    }
    if curve.is_polygon() {
        return invert_linear(curve, dir, p, z);
    }
    let fd = |x: f64| (projection_at(curve, dir, x), curve.velocity(x).dot(dir));
    solve_newton_bracketed(fd, p.lo, p.hi, p.value_lo, p.value_hi, z)
}

const TABLE_CELLS: usize = 64;

/// Parameters and projection values at evenly spaced points of a smooth
/// piece, so inversion can start from a narrow bracket.
#[derive(Clone, Debug)]
struct PieceTable {
    xs: Vec<f64>,
    vs: Vec<f64>,
}

impl PieceTable {
    fn new(curve: &Curve, dir: crate::curve::Point2, p: &Piece) -> Option<Self> {
        if curve.is_polygon() || !(p.hi > p.lo) {
            return None;
        }
        let xs: Vec<f64> = (0..=TABLE_CELLS)
            .map(|i| if i == TABLE_CELLS { p.hi } else { p.lo + (p.hi - p.lo) * i as f64 / TABLE_CELLS as f64 })
            .collect();
        let mut vs: Vec<f64> = xs.iter().map(|&x| projection_at(curve, dir, x)).collect();
        vs[0] = p.value_lo;
        vs[TABLE_CELLS] = p.value_hi;
        Some(Self { xs, vs })
    }

    fn invert(&self, curve: &Curve, dir: crate::curve::Point2, p: &Piece, z: f64) -> f64 {
        let tol = 1e-15 * (1.0 + z.abs());
        if (z - p.value_lo).abs() <= tol {
            return p.lo;
        }
        if (z - p.value_hi).abs() <= tol {
            return p.hi;
        }
        let up = p.value_hi >= p.value_lo;
        let k = self.vs.partition_point(|&v| if up { v < z } else { v > z }).clamp(1, TABLE_CELLS);
        let fd = |x: f64| (projection_at(curve, dir, x), curve.velocity(x).dot(dir));
        solve_newton_bracketed(fd, self.xs[k - 1], self.xs[k], self.vs[k - 1], self.vs[k], z)
    }
}

/// Exact inversion on a polygon piece: the projection is linear on edges.
fn invert_linear(curve: &Curve, dir: crate::curve::Point2, p: &Piece, z: f64) -> f64 {
    let mut knots = vec![p.lo];
    for shift in [0.0, 1.0] {
        for &b in curve.breaks() {
            let k = b + shift;
            if k > p.lo && k < p.hi {
                knots.push(k);
            }
        }
    }
    knots.push(p.hi);
    knots.sort_by(f64::total_cmp);
    let vals: Vec<f64> = knots.iter().map(|&k| projection_at(curve, dir, k)).collect();
    for i in 0..knots.len() - 1 {
        let (v0, v1) = (vals[i], vals[i + 1]);
        if (z - v0) * (z - v1) <= 0.0 && v0 != v1 {
            return knots[i] + (z - v0) / (v1 - v0) * (knots[i + 1] - knots[i]);
        }
    }
    if (z - p.value_lo).abs() < (z - p.value_hi).abs() {
        p.lo
    } else {
        p.hi
    }
}

/// All solutions of `π_θγ(s) = ζ`, one per monotone piece whose closed value
/// range contains `ζ`. At a tangency value both adjacent pieces report the
/// tangency point, so it appears twice.
pub fn level_set_solve(curve: &Curve, theta: Angle, zeta: f64) -> Result<Vec<f64>, ChordError> {
    let split = projection_split(curve, theta)?;
    Ok(level_set_with(curve, &split, zeta))
}

/// [`level_set_solve`] with a precomputed split.
pub fn level_set_with(curve: &Curve, split: &ProjectionSplit, zeta: f64) -> Vec<f64> {
    let dir = split.theta.direction();
    let mut out: Vec<f64> = split
        .pieces
        .iter()
        .filter(|p| p.covers(zeta, split.value_tol))
        .map(|p| split.unlift(invert_on_piece(curve, dir, p, zeta)))
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

/// Critical points of the projection.
pub fn tangency_points(curve: &Curve, theta: Angle) -> Result<Vec<f64>, ChordError> {
    Ok(projection_split(curve, theta)?.critical_set)
}

/// True iff the projection is injective on the whole domain.
pub fn single_line_hup_check(curve: &Curve, theta: Angle) -> bool {
    match projection_split(curve, theta) {
        Ok(split) => split.fold_count <= 1,
        Err(_) => false,
    }
}

/// The chord involution `Φ_θ` on `I₋ ∪ I₊`.
#[derive(Clone, Debug)]
pub struct ChordMap {
    curve: Arc<Curve>,
    theta: Angle,
    split: ProjectionSplit,
    tables: Vec<Option<PieceTable>>,
}

impl ChordMap {
    pub fn new(curve: Arc<Curve>, theta: Angle) -> Result<Self, ChordError> {
        let split = projection_split(&curve, theta)?;
        let dir = theta.direction();
        let tables = split.pieces.iter().map(|p| PieceTable::new(&curve, dir, p)).collect();
        Ok(Self { curve, theta, split, tables })
    }

    pub fn curve(&self) -> &Arc<Curve> {
        &self.curve
    }

    pub fn theta(&self) -> Angle {
        self.theta
    }

    pub fn split(&self) -> &ProjectionSplit {
        &self.split
    }

    fn value(&self, x: f64) -> f64 {
        projection_at(&self.curve, self.theta.direction(), x)
    }

    /// `π_θγ'(s)`, right-sided at corners.
    pub fn projection_derivative(&self, s: f64) -> f64 {
        self.curve.projection_derivative(self.theta, s)
    }

    /// The partner parameter of `s`.
    pub fn eval(&self, s: f64) -> Result<f64, ChordError> {
        if !self.curve.domain().contains(s) {
            return Err(CurveError::OutOfDomain { s }.into());
        }
        let sp = &self.split;
        let x = sp.lift(s);
        let Some(pi) = sp.piece_of(x) else {
            return Err(ChordError::InI0 { s });
        };
        let piece = sp.pieces[pi];
        // Tangency points and corner extremes are fixed.
        for c in [piece.lo, piece.hi] {
            if x == c && self.is_critical(c) {
                return Ok(sp.unlift(x));
            }
        }
        let zeta = self.value(x);
        let mut partner = None;
        for (qi, q) in sp.pieces.iter().enumerate() {
            if qi == pi || !q.covers(zeta, sp.value_tol) {
                continue;
            }
            if partner.is_some() {
                return Err(ChordError::MultiFold { s });
            }
            partner = Some(qi);
        }
        let Some(qi) = partner else {
            return Err(ChordError::InI0 { s });
        };
        let q = sp.pieces[qi];

        let vel = self.curve.velocity(x);
        let d = vel.dot(self.theta.direction());
        if d.abs() < TANGENCY_SWITCH * vel.norm() {
            if let Some(c) = self.shared_tangency(&piece, &q, x) {
                return Ok(sp.unlift(2.0 * c - x));
            }
        }
        let dir = self.theta.direction();
        let y = match &self.tables[qi] {
            Some(t) => t.invert(&self.curve, dir, &q, zeta),
            None => invert_on_piece(&self.curve, dir, &q, zeta),
        };
        Ok(sp.unlift(y))
    }

    fn is_critical(&self, c: f64) -> bool {
        let w = self.split.unlift(c);
        self.split.critical_set.iter().any(|&k| (k - w).abs() < 1e-14)
    }

    /// Smooth critical point joining pieces `p` and `q` nearest to `x`.
    fn shared_tangency(&self, p: &crate::chordmap::Piece, q: &Piece, x: f64) -> Option<f64> {
        let period = self.split.period.unwrap_or(f64::NAN);
        let same = |a: f64, b: f64| (a - b).abs() < 1e-14 || ((a - b).abs() - period).abs() < 1e-14;
        let mut best: Option<f64> = None;
        for c in [p.lo, p.hi] {
            let touches = same(c, q.lo) || same(c, q.hi);
            if touches
                && self.is_critical(c)
                && !self.curve.is_corner(c)
                && best.is_none_or(|b| (x - c).abs() < (x - b).abs())
            {
                best = Some(c);
            }
        }
        best
    }

    /// `π'(s) / π'(Φ(s))`, the implicit-function derivative of `Φ`; −1 at
    /// tangencies.
    pub fn derivative(&self, s: f64) -> Result<f64, ChordError> {
        let t = self.eval(s)?;
        let vel = self.curve.velocity(s);
        let d = vel.dot(self.theta.direction());
        if d.abs() < TANGENCY_SWITCH * vel.norm() {
            return Ok(-1.0);
        }
        Ok(d / self.projection_derivative(t))
    }

    /// `|π'(Φ(s))| / |π'(s)|`, the weight in the density relation; 1 at
    /// tangencies.
    pub fn weight(&self, s: f64, t: f64) -> f64 {
        let vs = self.curve.velocity(s);
        let ds = vs.dot(self.theta.direction()).abs();
        if ds < TANGENCY_SWITCH * vs.norm() {
            return 1.0;
        }
        self.projection_derivative(t).abs() / ds
    }

    /// Image of a set of parameters under `Φ`; parts in `I₀` are dropped.
    /// For closed curves the input and output live in `[0, 1)`.
    pub fn image(&self, set: &IntervalSet) -> IntervalSet {
        let paired = self.split.paired();
        let mut out = Vec::new();
        for &(c, d) in set.intersect(&paired).parts() {
            let (Ok(e1), Ok(e2), Ok(m)) = (self.eval(c), self.eval(d), self.eval(0.5 * (c + d))) else {
                continue;
            };
            match self.split.period {
                Some(p) => {
                    let l1 = (e2 - e1).rem_euclid(p);
                    if (m - e1).rem_euclid(p) <= l1 {
                        out.push((e1, e1 + l1));
                    } else {
                        out.push((e2, e2 + (e1 - e2).rem_euclid(p)));
                    }
                }
                None => out.push((e1.min(e2), e1.max(e2))),
            }
        }
        let set = IntervalSet::new(out);
        match self.split.period {
            Some(p) => set.wrapped(0.0, p),
            None => set,
        }
    }
}

/// The two partner maps of a cusp in the three-fold regime.
#[derive(Clone, Debug)]
pub struct CuspMaps {
    curve: Arc<Curve>,
    pub theta: Angle,
    /// Partner of the cusp value on the far piece.
    pub a: f64,
    /// Tangency point.
    pub b: f64,
    /// Where the near outer piece reaches the tangency value.
    pub c: f64,
    /// The cusp (corner) parameter.
    pub cusp: f64,
    middle: Piece,
    far: Piece,
}

impl CuspMaps {
    pub fn new(curve: Arc<Curve>, theta: Angle) -> Result<Self, ChordError> {
        let split = projection_split(&curve, theta)?;
        if split.fold_count < 3 || split.pieces.len() != 3 || curve.is_closed() {
            return Err(ChordError::NotCuspRegime);
        }
        let dir = theta.direction();
        let p = &split.pieces;
        let middle = p[1];
        let (near, far, cusp, b) = if curve.is_corner(middle.lo) {
            (p[0], p[2], middle.lo, middle.hi)
        } else if curve.is_corner(middle.hi) {
            (p[2], p[0], middle.hi, middle.lo)
        } else {
            return Err(ChordError::NotCuspRegime);
        };
        let v_cusp = projection_at(&curve, dir, cusp);
        let v_b = projection_at(&curve, dir, b);
        if !far.covers(v_cusp, 0.0) || !near.covers(v_b, 0.0) {
            return Err(ChordError::NotCuspRegime);
        }
        let a = invert_on_piece(&curve, dir, &far, v_cusp);
        let c = invert_on_piece(&curve, dir, &near, v_b);
        Ok(Self { curve, theta, a, b, c, cusp, middle, far })
    }

    fn check(&self, s: f64) -> Result<f64, ChordError> {
        let (lo, hi) = (self.c.min(self.cusp), self.c.max(self.cusp));
        if !(s > lo && s < hi) {
            return Err(ChordError::InI0 { s });
        }
        Ok(projection_at(&self.curve, self.theta.direction(), s))
    }

    /// Partner on the piece between the cusp and the tangency.
    pub fn phi(&self, s: f64) -> Result<f64, ChordError> {
        let z = self.check(s)?;
        Ok(invert_on_piece(&self.curve, self.theta.direction(), &self.middle, z))
    }

    /// Partner on the piece beyond the tangency.
    pub fn psi(&self, s: f64) -> Result<f64, ChordError> {
        let z = self.check(s)?;
        Ok(invert_on_piece(&self.curve, self.theta.direction(), &self.far, z))
    }
}
