//! Densities on curves and the measures `μ = f ds` they define.
//!
//! Sign convention: the level-set relation is used with absolute weights,
//! `Σ f(s)/|π_θγ'(s)| = 0` over each level set, and across a chord
//! `f(Φ(s)) = −f(s)·|π'(Φ(s))|/|π'(s)|`. This is the pushforward identity
//! `Φ_*μ = −μ`, and it is the form that direct quadrature of `μ̂` confirms
//! (`f = 1` on the circle has `μ̂(t, 0) ≠ 0`; odd densities annihilate).

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chordmap::{level_set_with, projection_split, ChordError, ChordMap, ProjectionSplit};
use crate::curve::{Angle, Curve, CurveError, CurveSpec, Point2};
use crate::dynamics::{compose_and_lift, DynamicsError, PeriodicOrbit};
use crate::intervals::IntervalSet;
use crate::par;
use crate::quad;

pub const DEFAULT_GRID: usize = 8192;
pub const DEFAULT_T_COUNT: usize = 501;
pub const DEFAULT_T_RANGE: (f64, f64) = (-50.0, 50.0);
/// Absolute target for the oscillatory quadrature.
pub const QUAD_TOL: f64 = 1e-9;
/// Level values this close to a critical value are skipped by residual checks.
pub const CRITICAL_SKIP: f64 = 1e-6;
const PANELS_PER_OSCILLATION: f64 = 10.0;
/// Baseline panels per unit parameter, before any oscillation.
const BASE_PANELS: f64 = 16.0;
const MAX_LEVEL: u32 = 9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error("quadrature did not reach the target; estimate {estimate}, last change {change:e}")]
    QuadratureNotConverged { estimate: Complex64, change: f64 },
    #[error("propagated region leaves {uncovered:e} of the domain uncovered")]
    TilingGap { uncovered: f64 },
    #[error("cell ({lo}, {hi}) meets I₀ of a propagation map")]
    NotPaired { lo: f64, hi: f64 },
    #[error("propagated values disagree at s = {s} (|Δ| = {delta:e})")]
    Inconsistent { s: f64, delta: f64 },
    #[error("structure absent: {0}")]
    StructureAbsent(String),
    #[error("density relation violated: residual {residual:e} > {tol:e}")]
    RelationViolated { residual: f64, tol: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error(transparent)]
    Chord(#[from] ChordError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Curve(#[from] CurveError),
}

/// A uniform run of grid nodes `x0 + k h`, `k < n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridBlock {
    pub x0: f64,
    pub h: f64,
    pub n: usize,
    /// Nodes wrap around with period `n h`.
    pub periodic: bool,
}

impl GridBlock {
    pub fn node(&self, k: usize) -> f64 {
        self.x0 + self.h * k as f64
    }

    /// Fractional node coordinate of `s`, or `None` outside the block.
    fn coord(&self, s: f64) -> Option<f64> {
        let u = (s - self.x0) / self.h;
        if self.periodic {
            Some(u.rem_euclid(self.n as f64))
        } else if u >= -1e-9 && u <= (self.n - 1) as f64 + 1e-9 {
            Some(u.clamp(0.0, (self.n - 1) as f64))
        } else {
            None
        }
    }
}

/// Cell-centred grid blocks with about `n` nodes over the curve's domain.
/// Closed curves get one periodic block starting at 0.
pub fn grid_layout(curve: &Curve, n: usize) -> Vec<GridBlock> {
    let dom = curve.domain();
    if let Some(p) = dom.period {
        return vec![GridBlock { x0: 0.0, h: p / n as f64, n, periodic: true }];
    }
    let total = dom.total_length();
    dom.intervals
        .iter()
        .map(|iv| {
            let m = ((n as f64 * iv.len() / total).round() as usize).max(4);
            let h = iv.len() / m as f64;
            GridBlock { x0: iv.lo + 0.5 * h, h, n: m, periodic: false }
        })
        .collect()
}

type DensityFn = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

#[derive(Clone)]
enum Repr {
    Closed { f: DensityFn },
    Grid { blocks: Vec<GridBlock>, offsets: Vec<usize>, values: Vec<Complex64> },
}

/// A complex density `f_μ` on the parameter domain, zero off its support.
#[derive(Clone)]
pub struct Density {
    repr: Repr,
    label: String,
    support: IntervalSet,
    breaks: Vec<f64>,
    period: Option<f64>,
}

impl fmt::Debug for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.repr {
            Repr::Closed { .. } => "closed",
            Repr::Grid { .. } => "grid",
        };
        f.debug_struct("Density")
            .field("label", &self.label)
            .field("kind", &kind)
            .field("support", &self.support)
            .finish()
    }
}

/// The curve's domain as an interval set (`[0, 1)` for closed curves).
pub fn domain_set(curve: &Curve) -> IntervalSet {
    IntervalSet::new(curve.domain().intervals.iter().map(|i| (i.lo, i.hi)))
}

impl Density {
    /// A density given by a formula on the whole domain.
    pub fn closed_form<F>(curve: &Curve, label: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64) -> Complex64 + Send + Sync + 'static,
    {
        Self {
            repr: Repr::Closed { f: Arc::new(f) },
            label: label.into(),
            support: domain_set(curve),
            breaks: Vec::new(),
            period: curve.domain().period,
        }
    }

    /// A real density given by a formula.
    pub fn real<F>(curve: &Curve, label: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::closed_form(curve, label, move |s| Complex64::new(f(s), 0.0))
    }

    pub fn zero(curve: &Curve) -> Self {
        Self::closed_form(curve, "zero", |_| Complex64::new(0.0, 0.0))
    }

    /// Restricts the density to `support`; `breaks` are parameters where
    /// it may fail to be smooth.
    pub fn restricted(mut self, support: IntervalSet, breaks: Vec<f64>) -> Self {
        self.support = self.support.intersect(&support);
        self.breaks.extend(breaks);
        self.breaks.sort_by(f64::total_cmp);
        self.breaks.dedup();
        self
    }

    /// Grid values with linear interpolation; zero outside the nodes of
    /// non-periodic blocks.
    pub fn from_grid(blocks: Vec<GridBlock>, values: Vec<Complex64>, period: Option<f64>) -> Result<Self, MeasureError> {
        let total: usize = blocks.iter().map(|b| b.n).sum();
        if total != values.len() {
            return Err(MeasureError::InvalidGrid(format!("{} values for {} nodes", values.len(), total)));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(MeasureError::InvalidGrid("non-finite value".into()));
        }
        let mut offsets = Vec::with_capacity(blocks.len());
        let mut parts = Vec::new();
        let mut breaks = Vec::new();
        let mut acc = 0;
        for b in &blocks {
            if b.n < 2 || !(b.h > 0.0) {
                return Err(MeasureError::InvalidGrid("blocks need two nodes and a positive step".into()));
            }
            offsets.push(acc);
            acc += b.n;
            if b.periodic {
                parts.push((0.0, b.h * b.n as f64));
                breaks.extend((0..b.n).map(|k| b.node(k).rem_euclid(b.h * b.n as f64)));
            } else {
                parts.push((b.node(0), b.node(b.n - 1)));
                breaks.extend((0..b.n).map(|k| b.node(k)));
            }
        }
        breaks.sort_by(f64::total_cmp);
        Ok(Self {
            repr: Repr::Grid { blocks, offsets, values },
            label: "grid".into(),
            support: IntervalSet::new(parts),
            breaks,
            period,
        })
    }

    /// Samples the density on [`grid_layout`] with `n` nodes.
    pub fn sampled(&self, curve: &Curve, n: usize) -> Result<Self, MeasureError> {
        let blocks = grid_layout(curve, n);
        let xs: Vec<f64> = blocks.iter().flat_map(|b| (0..b.n).map(move |k| b.node(k))).collect();
        let values = par::map_slice(&xs, |&s| self.eval(s));
        Self::from_grid(blocks, values, curve.domain().period).map(|d| d.with_label(self.label.clone()))
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn support(&self) -> &IntervalSet {
        &self.support
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn is_grid(&self) -> bool {
        matches!(self.repr, Repr::Grid { .. })
    }

    pub fn eval(&self, s: f64) -> Complex64 {
        let s = match self.period {
            Some(p) => {
                let w = s.rem_euclid(p);
                if w >= p {
                    0.0
                } else {
                    w
                }
            }
            None => s,
        };
        match &self.repr {
            Repr::Closed { f } => {
                if self.support.contains(s) {
                    f(s)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            Repr::Grid { blocks, offsets, values } => {
                for (b, &off) in blocks.iter().zip(offsets) {
                    let Some(u) = b.coord(s) else { continue };
                    let i = (u.floor() as usize).min(b.n - 1);
                    let r = u - i as f64;
                    let j = if b.periodic { (i + 1) % b.n } else { (i + 1).min(b.n - 1) };
                    return values[off + i] * (1.0 - r) + values[off + j] * r;
                }
                Complex64::new(0.0, 0.0)
            }
        }
    }

    /// `c·self + d·other`, evaluated pointwise.
    pub fn combine(&self, c: Complex64, other: &Density, d: Complex64) -> Density {
        let (a, b) = (self.clone(), other.clone());
        let mut breaks = self.breaks.clone();
        breaks.extend_from_slice(&other.breaks);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        Density {
            repr: Repr::Closed { f: Arc::new(move |s| c * a.eval(s) + d * b.eval(s)) },
            label: format!("{}+{}", self.label, other.label),
            support: self.support.union(&other.support),
            breaks,
            period: self.period,
        }
    }

    pub fn scaled(&self, c: f64) -> Density {
        let a = self.clone();
        Density {
            repr: Repr::Closed { f: Arc::new(move |s| a.eval(s) * c) },
            label: self.label.clone(),
            support: self.support.clone(),
            breaks: self.breaks.clone(),
            period: self.period,
        }
    }

    /// `∫ |f| ds`.
    pub fn l1_norm(&self, curve: &Curve) -> f64 {
        integrate_over(curve, &self.support, &self.breaks, |s| self.eval(s).norm()).0
    }

    /// `∫ f ds`, the total mass `μ̂(0)`.
    pub fn total_mass(&self, curve: &Curve) -> Complex64 {
        let re = integrate_over(curve, &self.support, &self.breaks, |s| self.eval(s).re).0;
        let im = integrate_over(curve, &self.support, &self.breaks, |s| self.eval(s).im).0;
        Complex64::new(re, im)
    }

    /// The serializable grid form, sampling closed forms on `n` nodes.
    pub fn to_file(&self, curve: &Curve, n: usize) -> Result<DensityFile, MeasureError> {
        let grid = match &self.repr {
            Repr::Grid { .. } => self.clone(),
            Repr::Closed { .. } => self.sampled(curve, n)?,
        };
        let Repr::Grid { blocks, values, .. } = &grid.repr else { unreachable!() };
        Ok(DensityFile {
            grid: blocks.iter().flat_map(|b| (0..b.n).map(move |k| b.node(k))).collect(),
            values_re: values.iter().map(|v| v.re).collect(),
            values_im: values.iter().map(|v| v.im).collect(),
            domain: curve.domain().intervals.iter().map(|i| [i.lo, i.hi]).collect(),
            period: curve.domain().period,
            label: Some(self.label.clone()),
        })
    }

    pub fn from_file(file: &DensityFile) -> Result<Self, MeasureError> {
        let n = file.grid.len();
        if file.values_re.len() != n || file.values_im.len() != n {
            return Err(MeasureError::InvalidGrid("grid and value lengths differ".into()));
        }
        if file.grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(MeasureError::InvalidGrid("grid must be strictly increasing".into()));
        }
        let values: Vec<Complex64> =
            file.values_re.iter().zip(&file.values_im).map(|(&r, &i)| Complex64::new(r, i)).collect();
        let mut blocks = Vec::new();
        match file.period {
            Some(p) => {
                if n < 2 {
                    return Err(MeasureError::InvalidGrid("too few nodes".into()));
                }
                let h = p / n as f64;
                check_uniform(&file.grid, h)?;
                blocks.push(GridBlock { x0: file.grid[0], h, n, periodic: true });
            }
            None => {
                for [lo, hi] in &file.domain {
                    let idx: Vec<usize> = (0..n).filter(|&k| file.grid[k] >= *lo && file.grid[k] <= *hi).collect();
                    if idx.is_empty() {
                        continue;
                    }
                    if idx.len() < 2 || file.grid[idx[0]] <= *lo || file.grid[idx[idx.len() - 1]] >= *hi {
                        return Err(MeasureError::InvalidGrid("grid must lie strictly inside the domain".into()));
                    }
                    let pts: Vec<f64> = idx.iter().map(|&k| file.grid[k]).collect();
                    let h = pts[1] - pts[0];
                    check_uniform(&pts, h)?;
                    blocks.push(GridBlock { x0: pts[0], h, n: pts.len(), periodic: false });
                }
                if blocks.iter().map(|b| b.n).sum::<usize>() != n {
                    return Err(MeasureError::InvalidGrid("nodes outside the domain".into()));
                }
            }
        }
        let d = Self::from_grid(blocks, values, file.period)?;
        Ok(match &file.label {
            Some(l) => d.with_label(l.clone()),
            None => d,
        })
    }
}

fn check_uniform(pts: &[f64], h: f64) -> Result<(), MeasureError> {
    let bad = pts.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs().max(1e-300) + 1e-12);
    if bad {
        Err(MeasureError::InvalidGrid("grid spacing must be uniform per domain interval".into()))
    } else {
        Ok(())
    }
}

/// Serialized density: grid values, linearly interpolated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityFile {
    pub grid: Vec<f64>,
    pub values_re: Vec<f64>,
    pub values_im: Vec<f64>,
    pub domain: Vec<[f64; 2]>,
    #[serde(default)]
    pub period: Option<f64>,
    #[serde(default)]
    pub label: Option<String>,
}

/// Sub-intervals of `set` on which both the curve and the density are
/// smooth.
fn smooth_pieces(curve: &Curve, set: &IntervalSet, breaks: &[f64]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for &(a, b) in set.parts() {
        let mut cuts: Vec<f64> = curve
            .breaks()
            .iter()
            .chain(breaks.iter())
            .copied()
            .filter(|&c| c > a + 1e-15 && c < b - 1e-15)
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut lo = a;
        for c in cuts {
            out.push((lo, c));
            lo = c;
        }
        out.push((lo, b));
    }
    out
}

/// Adaptive integral of a real function over `set`, split at breaks.
/// Returns the value and the summed last change.
pub fn integrate_over<F: Fn(f64) -> f64>(curve: &Curve, set: &IntervalSet, breaks: &[f64], f: F) -> (f64, f64) {
    let mut total = 0.0;
    let mut err = 0.0;
    for (a, b) in smooth_pieces(curve, set, breaks) {
        let (v, e) = quad::integrate_adaptive(&f, a, b, 1e-13);
        total += v;
        err += e;
    }
    (total, err)
}

fn max_speed(curve: &Curve, a: f64, b: f64) -> f64 {
    (0..=16)
        .map(|i| {
            let s = a + (b - a) * (i as f64 + 0.5) / 17.0;
            curve.velocity(s).norm()
        })
        .fold(0.0, f64::max)
}

/// The measure sampled at quadrature nodes: `μ̂(ξ) ≈ Σ wᵢ e^{−i⟨pᵢ, ξ⟩}`.
#[derive(Clone, Debug)]
pub struct SampledMeasure {
    pub points: Vec<Point2>,
    pub weights: Vec<Complex64>,
}

impl SampledMeasure {
    /// Layout with at least ten panels per oscillation of `e^{−i⟨γ, ξ⟩}`
    /// for `|ξ| ≤ xi_max`, refined `2^level` times.
    pub fn new(density: &Density, curve: &Curve, xi_max: f64, level: u32) -> Self {
        let mut nodes = Vec::new();
        let mut w = Vec::new();
        for (a, b) in smooth_pieces(curve, density.support(), density.breaks()) {
            let len = b - a;
            let osc = xi_max * max_speed(curve, a, b) * len / TAU;
            let base = (PANELS_PER_OSCILLATION * osc).ceil().max((BASE_PANELS * len).ceil()).max(1.0) as usize;
            quad::push_composite(a, b, base << level, &mut nodes, &mut w);
        }
        let vals: Vec<(Point2, Complex64)> = par::map_range(nodes.len(), |i| {
            let s = nodes[i];
            (curve.position(s), density.eval(s) * w[i])
        });
        let (points, weights) = vals.into_iter().filter(|(_, v)| *v != Complex64::new(0.0, 0.0)).unzip();
        Self { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn transform(&self, xi: Point2) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (p, w) in self.points.iter().zip(&self.weights) {
            let (s, c) = p.dot(xi).sin_cos();
            acc += w * Complex64::new(c, -s);
        }
        acc
    }

    pub fn mass(&self) -> Complex64 {
        self.weights.iter().sum()
    }
}

/// `μ̂(ξ) = ∫ f(s) e^{−i⟨γ(s), ξ⟩} ds`, doubling panels until two levels
/// agree to [`QUAD_TOL`].
pub fn fourier_transform(density: &Density, curve: &Curve, xi: Point2) -> Result<Complex64, MeasureError> {
    let sweep = transform_sweep(density, curve, &[xi], QUAD_TOL);
    if sweep.diagnostics.converged {
        Ok(sweep.values[0])
    } else {
        Err(MeasureError::QuadratureNotConverged { estimate: sweep.values[0], change: sweep.diagnostics.max_change })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureDiagnostics {
    pub nodes: usize,
    pub level: u32,
    /// Largest change between the last two refinement levels.
    pub max_change: f64,
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct Sweep {
    pub values: Vec<Complex64>,
    pub diagnostics: QuadratureDiagnostics,
}

/// `μ̂` at many frequencies, sharing one node layout per refinement level.
pub fn transform_sweep(density: &Density, curve: &Curve, xis: &[Point2], tol: f64) -> Sweep {
    let xi_max = xis.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let eval = |level: u32| -> (Vec<Complex64>, usize) {
        let m = SampledMeasure::new(density, curve, xi_max, level);
        (par::map_slice(xis, |&x| m.transform(x)), m.len())
    };
    let (mut prev, _) = eval(0);
    let mut change = f64::INFINITY;
    for level in 1..=MAX_LEVEL {
        let (cur, nodes) = eval(level);
        change = prev.iter().zip(&cur).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        let done = change <= tol;
        prev = cur;
        if done || level == MAX_LEVEL {
            return Sweep {
                values: prev,
                diagnostics: QuadratureDiagnostics { nodes, level, max_change: change, converged: done },
            };
        }
    }
    Sweep { values: prev, diagnostics: QuadratureDiagnostics { nodes: 0, level: 0, max_change: change, converged: false } }
}

/// `n` interior level values spread over the projection range.
pub fn zeta_grid(split: &ProjectionSplit, n: usize) -> Vec<f64> {
    let lo = split.pieces.iter().map(|p| p.min_value()).fold(f64::INFINITY, f64::min);
    let hi = split.pieces.iter().map(|p| p.max_value()).fold(f64::NEG_INFINITY, f64::max);
    (0..n).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / n as f64).collect()
}

/// `Σ_{s ∈ π_θγ⁻¹(ζ)} f(s)/|π_θγ'(s)|`.
pub fn level_sum(density: &Density, curve: &Curve, split: &ProjectionSplit, zeta: f64) -> Complex64 {
    level_set_with(curve, split, zeta)
        .into_iter()
        .map(|s| density.eval(s) / curve.projection_derivative(split.theta, s).abs())
        .sum()
}

/// Largest `|Σ f/|π'||` over the level values, skipping values within
/// [`CRITICAL_SKIP`] of a critical value or a window end.
pub fn eqfund_residual(density: &Density, curve: &Curve, theta: Angle, zetas: &[f64]) -> Result<f64, MeasureError> {
    let split = projection_split(curve, theta)?;
    let skip = split.value_breakpoints();
    let kept: Vec<f64> =
        zetas.iter().copied().filter(|z| skip.iter().all(|c| (z - c).abs() > CRITICAL_SKIP)).collect();
    let sums = par::map_slice(&kept, |&z| level_sum(density, curve, &split, z).norm());
    Ok(sums.into_iter().fold(0.0, f64::max))
}

/// [`eqfund_residual`] on [`zeta_grid`] with `n` points.
pub fn eqfund_residual_grid(density: &Density, curve: &Curve, theta: Angle, n: usize) -> Result<f64, MeasureError> {
    let split = projection_split(curve, theta)?;
    eqfund_residual(density, curve, theta, &zeta_grid(&split, n))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineReport {
    pub theta: Angle,
    /// `max_t |μ̂(t θ)|`.
    pub max_modulus: f64,
    pub argmax_t: f64,
    pub values: Vec<Complex64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnihilationReport {
    pub t_range: (f64, f64),
    pub t_count: usize,
    pub t: Vec<f64>,
    pub lines: Vec<LineReport>,
    pub quadrature: QuadratureDiagnostics,
}

impl AnnihilationReport {
    pub fn max_moduli(&self) -> Vec<f64> {
        self.lines.iter().map(|l| l.max_modulus).collect()
    }

    /// Rows `(θ, t, re, im, abs)` for CSV export.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64, f64, f64)> + '_ {
        self.lines.iter().flat_map(move |l| {
            self.t.iter().zip(&l.values).map(move |(&t, v)| (l.theta.radians(), t, v.re, v.im, v.norm()))
        })
    }
}

pub fn uniform_grid(range: (f64, f64), count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.5 * (range.0 + range.1)],
        _ => (0..count).map(|i| range.0 + (range.1 - range.0) * i as f64 / (count - 1) as f64).collect(),
    }
}

/// `μ̂(t θ)` on a uniform `t`-grid for each line.
pub fn check_annihilation(
    density: &Density,
    curve: &Curve,
    lines: &[Angle],
    t_range: (f64, f64),
    t_count: usize,
) -> AnnihilationReport {
    let t = uniform_grid(t_range, t_count);
    let xis: Vec<Point2> = lines.iter().flat_map(|th| t.iter().map(move |&t| th.direction() * t)).collect();
    let sweep = transform_sweep(density, curve, &xis, QUAD_TOL);
    let lines = lines
        .iter()
        .enumerate()
        .map(|(k, &theta)| {
            let values = sweep.values[k * t.len()..(k + 1) * t.len()].to_vec();
            let (i, m) = values.iter().map(|v| v.norm()).enumerate().fold((0, 0.0), |a, (i, m)| if m > a.1 { (i, m) } else { a });
            LineReport { theta, max_modulus: m, argmax_t: t.get(i).copied().unwrap_or(0.0), values }
        })
        .collect();
    AnnihilationReport { t_range, t_count, t, lines, quadrature: sweep.diagnostics }
}

/// Whether a propagated density must tile the whole domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coverage {
    Full,
    Partial,
}

#[derive(Clone, Debug)]
struct Cell {
    lo: f64,
    hi: f64,
    /// Maps applied to a point of the cell to reach the seed region.
    word: Vec<usize>,
}

#[derive(Debug)]
struct Propagated {
    seed: Density,
    maps: Vec<ChordMap>,
    cells: Vec<Cell>,
    period: Option<f64>,
}

impl Propagated {
    fn cell_of(&self, s: f64) -> Option<&Cell> {
        self.cells.iter().find(|c| c.lo <= s && s <= c.hi)
    }

    fn along(&self, s: f64, word: &[usize]) -> Complex64 {
        let mut x = s;
        let mut factor = 1.0;
        for &m in word {
            let Ok(t) = self.maps[m].eval(x) else {
                return Complex64::new(0.0, 0.0);
            };
            factor *= -self.maps[m].weight(t, x);
            x = t;
        }
        self.seed.eval(x) * factor
    }

    fn eval(&self, s: f64) -> Complex64 {
        let s = match self.period {
            Some(p) => s.rem_euclid(p),
            None => s,
        };
        match self.cell_of(s) {
            Some(c) => self.along(s, &c.word),
            None => Complex64::new(0.0, 0.0),
        }
    }
}

/// Extends `seed` along each map in turn by
/// `f(Φ(s)) = −f(s)·|π'(Φ(s))|/|π'(s)|`.
///
/// Each step adds the image of the current region under one map. Where an
/// image meets ground already covered, the two definitions are compared.
pub fn propagate_density(
    seed: &Density,
    maps: &[ChordMap],
    curve: &Curve,
    coverage: Coverage,
) -> Result<Density, MeasureError> {
    let period = curve.domain().period;
    let mut prop = Propagated {
        seed: seed.clone(),
        maps: maps.to_vec(),
        cells: seed.support().parts().iter().map(|&(lo, hi)| Cell { lo, hi, word: Vec::new() }).collect(),
        period,
    };
    let scale = seed.support().parts().iter().flat_map(|&(a, b)| (0..=16).map(move |i| a + (b - a) * i as f64 / 16.0));
    let scale = scale.map(|s| seed.eval(s).norm()).fold(0.0, f64::max).max(1e-300);
    for (mi, map) in maps.iter().enumerate() {
        let paired = map.split().paired();
        let mut covered = IntervalSet::new(prop.cells.iter().map(|c| (c.lo, c.hi)));
        let mut added = Vec::new();
        for cell in &prop.cells {
            let part = IntervalSet::single(cell.lo, cell.hi);
            if part.difference(&paired).measure() > 1e-12 {
                return Err(MeasureError::NotPaired { lo: cell.lo, hi: cell.hi });
            }
            let image = map.image(&part);
            let mut word = vec![mi];
            word.extend_from_slice(&cell.word);
            for &(a, b) in image.intersect(&covered).parts() {
                if b - a < 1e-9 {
                    continue;
                }
                let m = 0.5 * (a + b);
                let old = prop.eval(m);
                let new = prop.along(m, &word);
                let delta = (old - new).norm();
                if delta > 1e-8 * scale.max(old.norm()) {
                    return Err(MeasureError::Inconsistent { s: m, delta });
                }
            }
            let fresh = image.difference(&covered);
            for &(a, b) in fresh.parts() {
                added.push(Cell { lo: a, hi: b, word: word.clone() });
            }
            covered = covered.union(&fresh);
        }
        prop.cells.extend(added);
    }
    let covered = IntervalSet::new(prop.cells.iter().map(|c| (c.lo, c.hi)));
    if coverage == Coverage::Full {
        let uncovered = domain_set(curve).difference(&covered).measure();
        if uncovered > 1e-9 {
            return Err(MeasureError::TilingGap { uncovered });
        }
    }
    let mut breaks: Vec<f64> = prop.cells.iter().flat_map(|c| [c.lo, c.hi]).collect();
    for m in maps {
        breaks.extend_from_slice(&m.split().critical_set);
    }
    let label = format!("{}-propagated", seed.label());
    let prop = Arc::new(prop);
    let f = Density::closed_form(curve, label, move |s| prop.eval(s));
    Ok(f.restricted(covered, breaks))
}

/// Shape of the seed on its interval `(a, b)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedProfile {
    /// `sin(π u)` with `u = (s − a)/(b − a)`.
    Sine,
    /// `exp(1 − 1/(1 − (2u − 1)²))`, smooth with compact support.
    Bump,
}

impl SeedProfile {
    pub fn eval(self, a: f64, b: f64, s: f64) -> f64 {
        let u = (s - a) / (b - a);
        if !(0.0..=1.0).contains(&u) {
            return 0.0;
        }
        match self {
            SeedProfile::Sine => (PI * u).sin(),
            SeedProfile::Bump => {
                let v = 2.0 * u - 1.0;
                if v.abs() >= 1.0 {
                    0.0
                } else {
                    (1.0 - 1.0 / (1.0 - v * v)).exp()
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CounterexampleKind {
    /// Circle with `θ₁ = 0`, `θ₂ = π/q`.
    CircleRational { q: usize, profile: SeedProfile },
    /// Hyperbola `v² − u² = 1` with `θ₂ = π/2 − θ₁`, the pair orthogonal
    /// for the Lorentz form `v² − u²`.
    HyperbolaPerpendicular { theta1: f64, profile: SeedProfile },
    /// Any closed curve whose composed map has `Φ^q = id` near the orbit.
    GenericPeriodic { curve: CurveSpec, theta1: f64, theta2: f64, orbit: PeriodicOrbit, profile: SeedProfile },
}

#[derive(Clone, Debug)]
pub struct Counterexample {
    pub density: Density,
    pub curve: Arc<Curve>,
    pub lines: [Angle; 2],
    /// The seed interval.
    pub seed: (f64, f64),
    pub l1_norm: f64,
}

/// Builds a nonzero density annihilated on both lines of a non-HUP
/// configuration.
pub fn construct_counterexample(kind: &CounterexampleKind) -> Result<Counterexample, MeasureError> {
    match kind {
        CounterexampleKind::CircleRational { q, profile } => {
            if *q < 2 {
                return Err(MeasureError::StructureAbsent("q must be at least 2".into()));
            }
            let curve = Arc::new(Curve::circle());
            let lines = [Angle::new(0.0), Angle::new(PI / *q as f64)];
            dihedral_density(curve, lines, *q, *profile, Coverage::Full, false)
        }
        CounterexampleKind::HyperbolaPerpendicular { theta1, profile } => {
            let t1 = Angle::new(*theta1);
            let t2 = Angle::new(PI / 2.0 - theta1);
            let c = t1.direction();
            if (c.x.abs() - c.y.abs()).abs() < 1e-9 || c.x.abs() < 1e-12 || c.y.abs() < 1e-12 {
                return Err(MeasureError::StructureAbsent("θ₁ must avoid multiples of π/4".into()));
            }
            let curve = Arc::new(Curve::new(CurveSpec::HyperbolaStd { x_max: 50.0 })?);
            dihedral_density(curve, [t1, t2], 2, *profile, Coverage::Partial, true)
        }
        CounterexampleKind::GenericPeriodic { curve, theta1, theta2, orbit, profile } => {
            let curve = Arc::new(Curve::new(curve.clone())?);
            let lines = [Angle::new(*theta1), Angle::new(*theta2)];
            let m1 = ChordMap::new(curve.clone(), lines[0])?;
            let m2 = ChordMap::new(curve.clone(), lines[1])?;
            let lift = compose_and_lift(&m1, &m2)?;
            let Some(&x) = orbit.points.first() else {
                return Err(MeasureError::StructureAbsent("empty orbit".into()));
            };
            let q = orbit.q.max(1);
            let mut worst: f64 = 0.0;
            for i in 0..=32 {
                let y = x - 0.01 + 0.02 * i as f64 / 32.0;
                let mut z = y;
                for _ in 0..q {
                    z = lift.eval(z)?;
                }
                worst = worst.max((z - y - orbit.p as f64).abs());
            }
            if worst > 1e-9 {
                return Err(MeasureError::StructureAbsent(format!(
                    "Φ^{q} differs from the identity by {worst:e} near the orbit"
                )));
            }
            dihedral_density(curve, lines, q, *profile, Coverage::Partial, false)
        }
    }
}

/// Points where a fundamental domain of the group generated by the two
/// chord maps can end: critical points, ends of the paired sets, and their
/// images.
fn special_points(curve: &Curve, maps: &[ChordMap; 2], q: usize) -> Vec<f64> {
    let dom = curve.domain();
    let mut pts: Vec<f64> = Vec::new();
    for m in maps {
        pts.extend(m.split().critical_set.iter().map(|&c| dom.wrap(c)));
        pts.extend(m.split().paired().parts().iter().flat_map(|&(a, b)| [dom.wrap(a), dom.wrap(b)]));
    }
    for iv in &dom.intervals {
        pts.extend([dom.wrap(iv.lo), dom.wrap(iv.hi)]);
    }
    let dedup = |v: &mut Vec<f64>| {
        v.sort_by(f64::total_cmp);
        v.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        if let (Some(p), Some(&first)) = (dom.period, v.first()) {
            while v.len() > 1 && (v[v.len() - 1] - first - p).abs() < 1e-9 {
                v.pop();
            }
        }
    };
    dedup(&mut pts);
    for _ in 0..2 * q + 2 {
        let mut next = pts.clone();
        for &p in &pts {
            for m in maps {
                if let Ok(t) = m.eval(p) {
                    next.push(dom.wrap(t));
                }
            }
        }
        dedup(&mut next);
        if next.len() == pts.len() || next.len() > 4096 {
            pts = next;
            break;
        }
        pts = next;
    }
    pts
}

fn dihedral_density(
    curve: Arc<Curve>,
    lines: [Angle; 2],
    q: usize,
    profile: SeedProfile,
    coverage: Coverage,
    normalize: bool,
) -> Result<Counterexample, MeasureError> {
    if lines[0].same_line(lines[1]) {
        return Err(MeasureError::StructureAbsent("the two lines coincide".into()));
    }
    let maps = [ChordMap::new(curve.clone(), lines[0])?, ChordMap::new(curve.clone(), lines[1])?];
    let pts = special_points(&curve, &maps, q);
    let dom = curve.domain();
    let mut gaps: Vec<(f64, f64)> = pts.windows(2).map(|w| (w[0], w[1])).collect();
    if let (Some(p), Some(&first), Some(&last)) = (dom.period, pts.first(), pts.last()) {
        gaps.push((last, first + p));
    }
    gaps.retain(|&(a, b)| b - a > 1e-6 && dom.contains(dom.wrap(0.5 * (a + b))));
    // Longest first; ties keep parameter order.
    gaps.sort_by(|x, y| {
        let (lx, ly) = (x.1 - x.0, y.1 - y.0);
        if (lx - ly).abs() < 1e-9 {
            x.0.total_cmp(&y.0)
        } else {
            ly.total_cmp(&lx)
        }
    });
    let sequence: Vec<ChordMap> = (0..2 * q + 2).map(|i| maps[i % 2].clone()).collect();
    let shrinks: &[f64] = if coverage == Coverage::Full { &[1.0] } else { &[1.0, 0.5, 0.25, 0.125, 0.0625] };
    let mut last_err = MeasureError::StructureAbsent("no fundamental interval found".into());
    // Cost of a candidate: quadrature work, which grows with the speed of
    // the parametrization over the cells.
    let cost = |d: &Density| -> f64 {
        d.support().parts().iter().map(|&(a, b)| (b - a) * max_speed(&curve, a, b).max(1.0)).sum()
    };
    let mut best: Option<(f64, Density, (f64, f64))> = None;
    for &(a, b) in gaps.iter().take(12) {
        for &k in shrinks {
            let mid = 0.5 * (a + b);
            let half = 0.5 * (b - a) * k;
            let (lo, hi) = (mid - half, mid + half);
            let support = match dom.period {
                Some(p) => IntervalSet::single(lo, hi).wrapped(0.0, p),
                None => IntervalSet::single(lo, hi),
            };
            let period = dom.period;
            let seed = Density::real(&curve, format!("{profile:?}").to_lowercase(), move |s| {
                let s = match period {
                    Some(p) => lo + (s - lo).rem_euclid(p),
                    None => s,
                };
                profile.eval(lo, hi, s)
            })
            .restricted(support, vec![lo, hi]);
            match propagate_density(&seed, &sequence, &curve, coverage) {
                Ok(density) => {
                    if coverage == Coverage::Full {
                        best = Some((0.0, density, (lo, hi)));
                        break;
                    }
                    let c = cost(&density);
                    if best.as_ref().is_none_or(|b| c < b.0) {
                        best = Some((c, density, (lo, hi)));
                    }
                }
                Err(e) => last_err = e,
            }
        }
        if coverage == Coverage::Full && best.is_some() {
            break;
        }
    }
    if let Some((_, mut density, seed)) = best {
        let mut l1 = density.l1_norm(&curve);
        if l1 > 1e-12 {
            if normalize {
                density = density.scaled(1.0 / l1);
                l1 = 1.0;
            }
            return Ok(Counterexample { density, curve, lines, seed, l1_norm: l1 });
        }
    }
    Err(match last_err {
        MeasureError::StructureAbsent(s) => MeasureError::StructureAbsent(s),
        e => MeasureError::StructureAbsent(format!("propagation failed: {e}")),
    })
}

/// One pass of the `L²(ds)` projection onto `{f : f∘Φ = −f·|π'∘Φ|/|π'|}`:
/// `P f(s) = (f(s) − f(Φ(s)))/(1 + |π'(Φ(s))|/|π'(s)|)`, and zero on `I₀`.
pub fn project_density(density: &Density, map: &ChordMap) -> Density {
    let f = density.clone();
    let m = map.clone();
    let curve = map.curve().clone();
    let mut breaks = density.breaks().to_vec();
    breaks.extend_from_slice(&map.split().critical_set);
    for &(a, b) in density.support().parts() {
        for e in [a, b] {
            if let Ok(t) = map.eval(e) {
                breaks.push(curve.domain().wrap(t));
            }
        }
    }
    let support = map.split().paired();
    Density::closed_form(&curve, format!("P[{}]", density.label()), move |s| match m.eval(s) {
        Ok(t) => (f.eval(s) - f.eval(t)) / (1.0 + m.weight(s, t)),
        Err(_) => Complex64::new(0.0, 0.0),
    })
    .restricted(support, breaks)
}

/// A sparse row: `(f_i − Σ c_j f_j)/(1 + w)`.
#[derive(Clone, Debug)]
struct Row {
    stencil: Vec<(usize, f64)>,
    w: f64,
    paired: bool,
}

/// The projection for one angle, discretized on grid blocks with cubic
/// Lagrange interpolation at the partner parameter.
#[derive(Clone, Debug)]
pub struct GridProjector {
    rows: Vec<Row>,
}

/// Interpolation stencil for the value at `t`: cubic Lagrange, or linear
/// when `order` is 1.
fn stencil(blocks: &[GridBlock], offsets: &[usize], t: f64, order: usize) -> Vec<(usize, f64)> {
    let m = order + 1;
    for (b, &off) in blocks.iter().zip(offsets) {
        let u = (t - b.x0) / b.h;
        let lead = (m as i64 - 1) / 2;
        let (start, u) = if b.periodic {
            let u = u.rem_euclid(b.n as f64);
            (u.floor() as i64 - lead, u)
        } else {
            if u < -0.5 || u > b.n as f64 - 0.5 {
                continue;
            }
            let u = u.clamp(0.0, (b.n - 1) as f64);
            ((u.floor() as i64 - lead).clamp(0, b.n as i64 - m as i64), u)
        };
        let mut out = Vec::with_capacity(m);
        for k in 0..m as i64 {
            let xk = (start + k) as f64;
            let mut c = 1.0;
            for l in 0..m as i64 {
                if l != k {
                    c *= (u - (start + l) as f64) / (xk - (start + l) as f64);
                }
            }
            let idx = (start + k).rem_euclid(b.n as i64) as usize;
            out.push((off + idx, c));
        }
        return out;
    }
    Vec::new()
}

impl GridProjector {
    pub fn new(map: &ChordMap, blocks: &[GridBlock], order: usize) -> Self {
        let mut offsets = Vec::new();
        let mut xs = Vec::new();
        for b in blocks {
            offsets.push(xs.len());
            xs.extend((0..b.n).map(|k| b.node(k)));
        }
        let rows = par::map_slice(&xs, |&s| match map.eval(s) {
            Ok(t) => Row { stencil: stencil(blocks, &offsets, t, order), w: map.weight(s, t), paired: true },
            Err(_) => Row { stencil: Vec::new(), w: 0.0, paired: false },
        });
        Self { rows }
    }

    pub fn apply(&self, f: &[Complex64]) -> Vec<Complex64> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                if !r.paired {
                    return Complex64::new(0.0, 0.0);
                }
                let partner: Complex64 = r.stencil.iter().map(|&(j, c)| f[j] * c).sum();
                (f[i] - partner) / (1.0 + r.w)
            })
            .collect()
    }

    /// Grid nodes with no partner.
    pub fn unpaired(&self) -> impl Iterator<Item = usize> + '_ {
        self.rows.iter().enumerate().filter(|(_, r)| !r.paired).map(|(i, _)| i)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub grid_size: usize,
    pub iterations: usize,
    pub seed: u64,
    /// Fourier modes in the random starting density.
    pub modes: usize,
    /// Stop once the norm falls below this fraction of the initial norm.
    pub stop_ratio: f64,
    /// Interpolation order at partner parameters, 1 or 3. Cubic is more
    /// accurate per pass but is not contractive on strongly stretched
    /// grids, where a non-decaying case can slowly blow up.
    pub order: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { grid_size: 4096, iterations: 10_000, seed: 7, modes: 12, stop_ratio: 1e-8, order: 1 }
    }
}

#[derive(Clone, Debug)]
pub struct SearchResult {
    pub density: Density,
    /// Grid `L¹` norm before the first pass and after each pass.
    pub history: Vec<f64>,
    pub iterations: usize,
    pub ratio: f64,
    /// [`eqfund_residual`] of the final density for both angles.
    pub residuals: [f64; 2],
}

fn grid_l1(blocks: &[GridBlock], f: &[Complex64]) -> f64 {
    let mut acc = 0.0;
    let mut i = 0;
    for b in blocks {
        acc += b.h * f[i..i + b.n].iter().map(|v| v.norm()).sum::<f64>();
        i += b.n;
    }
    acc
}

/// Smooth pseudo-random start: a few random Fourier modes in the
/// normalized parameter, forced to zero where either map has no partner.
pub fn random_smooth(curve: &Curve, blocks: &[GridBlock], modes: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<(f64, f64)> = (0..=modes).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let (lo, len) = match curve.domain().period {
        Some(p) => (0.0, p),
        None => (curve.domain().lo(), curve.domain().hi() - curve.domain().lo()),
    };
    blocks
        .iter()
        .flat_map(|b| (0..b.n).map(move |k| b.node(k)))
        .map(|s| {
            let u = TAU * (s - lo) / len;
            let v: f64 = coeffs
                .iter()
                .enumerate()
                .map(|(k, &(a, c))| {
                    let k = k as f64;
                    (a * (k * u).cos() + c * (k * u).sin()) / k.max(1.0)
                })
                .sum();
            Complex64::new(v, 0.0)
        })
        .collect()
}

/// Alternating projections onto the two relation subspaces, starting from
/// a seeded random density. A decaying norm is evidence for uniqueness; a
/// norm that settles away from zero exhibits an annihilator.
pub fn annihilator_search(
    curve: Arc<Curve>,
    theta1: Angle,
    theta2: Angle,
    config: &SearchConfig,
) -> Result<SearchResult, MeasureError> {
    let m1 = ChordMap::new(curve.clone(), theta1)?;
    let m2 = ChordMap::new(curve.clone(), theta2)?;
    let blocks = grid_layout(&curve, config.grid_size);
    let p1 = GridProjector::new(&m1, &blocks, config.order);
    let p2 = GridProjector::new(&m2, &blocks, config.order);
    let mut f = random_smooth(&curve, &blocks, config.modes, config.seed);
    for i in p1.unpaired().chain(p2.unpaired()) {
        f[i] = Complex64::new(0.0, 0.0);
    }
    let n0 = grid_l1(&blocks, &f);
    if n0 > 0.0 {
        for v in &mut f {
            *v /= n0;
        }
    }
    let mut history = vec![if n0 > 0.0 { 1.0 } else { 0.0 }];
    let mut iterations = 0;
    while iterations < config.iterations {
        f = p2.apply(&p1.apply(&f));
        iterations += 1;
        let n = grid_l1(&blocks, &f);
        let prev = *history.last().unwrap_or(&0.0);
        history.push(n);
        if n <= config.stop_ratio * history[0] || (prev - n).abs() <= 1e-14 * history[0] {
            break;
        }
    }
    let ratio = if history[0] > 0.0 { history[history.len() - 1] / history[0] } else { 0.0 };
    let density = Density::from_grid(blocks, f, curve.domain().period)?.with_label("annihilator-search");
    let residuals = [
        eqfund_residual_grid(&density, &curve, theta1, 257)?,
        eqfund_residual_grid(&density, &curve, theta2, 257)?,
    ];
    Ok(SearchResult { density, history, iterations, ratio, residuals })
}

/// `(∫_{Φ(J)} |f|, ∫_J |f|)`, which agree when `f` satisfies the relation
/// for the map's angle.
pub fn mass_invariance_check(density: &Density, map: &ChordMap, j: (f64, f64)) -> Result<(f64, f64), MeasureError> {
    check_relation(density, map)?;
    let (set, image) = interval_and_image(map, j);
    let curve = map.curve();
    let a = integrate_over(curve, &image, density.breaks(), |s| density.eval(s).norm()).0;
    let b = integrate_over(curve, &set, density.breaks(), |s| density.eval(s).norm()).0;
    Ok((a, b))
}

/// `(∫_{Φ(J)} f, ∫_J f)`; the first is minus the second under the relation.
pub fn signed_mass_pair(density: &Density, map: &ChordMap, j: (f64, f64)) -> Result<(Complex64, Complex64), MeasureError> {
    check_relation(density, map)?;
    let (set, image) = interval_and_image(map, j);
    let curve = map.curve();
    let int = |set: &IntervalSet| {
        let re = integrate_over(curve, set, density.breaks(), |s| density.eval(s).re).0;
        let im = integrate_over(curve, set, density.breaks(), |s| density.eval(s).im).0;
        Complex64::new(re, im)
    };
    Ok((int(&image), int(&set)))
}

fn interval_and_image(map: &ChordMap, j: (f64, f64)) -> (IntervalSet, IntervalSet) {
    let set = match map.curve().domain().period {
        Some(p) => IntervalSet::single(j.0, j.1).wrapped(0.0, p),
        None => IntervalSet::single(j.0, j.1),
    };
    let image = map.image(&set);
    (set, image)
}

/// Relative residual test: the level sums must be tiny against the sums
/// of their absolute terms.
fn check_relation(density: &Density, map: &ChordMap) -> Result<(), MeasureError> {
    let curve = map.curve();
    let split = map.split();
    let skip = split.value_breakpoints();
    let zetas: Vec<f64> =
        zeta_grid(split, 129).into_iter().filter(|z| skip.iter().all(|c| (z - c).abs() > CRITICAL_SKIP)).collect();
    let mut residual: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for z in zetas {
        let roots = level_set_with(curve, split, z);
        let mut sum = Complex64::new(0.0, 0.0);
        for s in roots {
            let term = density.eval(s) / curve.projection_derivative(split.theta, s).abs();
            sum += term;
            scale = scale.max(term.norm());
        }
        residual = residual.max(sum.norm());
    }
    let tol = 1e-6 * scale;
    if residual > tol {
        return Err(MeasureError::RelationViolated { residual, tol });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `J_n(x) = (1/π)∫₀^π cos(nτ − x sin τ) dτ` by the trapezoid rule, which
    /// is spectrally accurate for this periodic integrand.
    fn bessel_j(n: i32, x: f64) -> f64 {
        let m = 4000;
        let h = PI / m as f64;
        let g = |t: f64| (n as f64 * t - x * t.sin()).cos();
        let mut acc = 0.5 * (g(0.0) + g(PI));
        for k in 1..m {
            acc += g(k as f64 * h);
        }
        acc * h / PI
    }

    fn circle() -> Arc<Curve> {
        Arc::new(Curve::circle())
    }

    fn sin4(c: &Curve) -> Density {
        Density::real(c, "sin4", |s| (4.0 * PI * s).sin())
    }

    #[test]
    fn transform_at_origin() {
        let c = circle();
        let one = Density::real(&c, "one", |_| 1.0);
        assert!((fourier_transform(&one, &c, Point2::new(0.0, 0.0)).unwrap() - 1.0).norm() < 1e-13);
        assert!(fourier_transform(&sin4(&c), &c, Point2::new(0.0, 0.0)).unwrap().norm() < 1e-13);
    }

    #[test]
    fn constant_density_gives_j0() {
        let c = circle();
        let one = Density::real(&c, "one", |_| 1.0);
        for t in [0.5, 3.0, 7.5, -12.0] {
            let v = fourier_transform(&one, &c, Point2::new(t, 0.0)).unwrap();
            assert!((v.re - bessel_j(0, t)).abs() < 1e-10 && v.im.abs() < 1e-12, "t={t}: {v}");
        }
    }

    #[test]
    fn sin4_annihilates_axes_but_not_diagonal() {
        let c = circle();
        let f = sin4(&c);
        let r = check_annihilation(&f, &c, &[Angle::new(0.0), Angle::new(PI / 2.0)], (-50.0, 50.0), 501);
        assert!(r.max_moduli().iter().all(|&m| m <= 1e-8), "{:?}", r.max_moduli());
        let d = check_annihilation(&f, &c, &[Angle::new(PI / 4.0)], (-50.0, 50.0), 501);
        assert!(d.lines[0].max_modulus > 1e-3);
        // Substituting u = 2πs − π/4 gives μ̂(tθ) = −J₂(t).
        for (t, v) in d.t.iter().zip(&d.lines[0].values).step_by(25) {
            if t.abs() <= 20.0 {
                assert!((v.re + bessel_j(2, *t)).abs() < 1e-9, "t={t}");
            }
        }
        let z = check_annihilation(&Density::zero(&c), &c, &[Angle::new(0.3)], (-5.0, 5.0), 11);
        assert_eq!(z.lines[0].max_modulus, 0.0);
    }

    #[test]
    fn eqfund_residuals() {
        let c = circle();
        let odd = Density::real(&c, "odd", |s| (TAU * s).sin() + 0.4 * (3.0 * TAU * s).sin());
        assert!(eqfund_residual_grid(&odd, &c, Angle::new(0.0), 257).unwrap() <= 1e-9);
        let zetas: Vec<f64> = (0..101).map(|i| -0.99 + 1.98 * i as f64 / 100.0).collect();
        let one = Density::real(&c, "one", |_| 1.0);
        let r = eqfund_residual(&one, &c, Angle::new(0.0), &zetas).unwrap();
        // Both preimages of ζ contribute 1/(2π√(1 − ζ²)).
        let expect = zetas.iter().map(|z| 2.0 / (TAU * (1.0 - z * z).sqrt())).fold(0.0, f64::max);
        assert!((r - expect).abs() < 1e-9 * expect);
        assert_eq!(eqfund_residual(&Density::zero(&c), &c, Angle::new(0.0), &zetas).unwrap(), 0.0);
    }

    #[test]
    fn propagation_recovers_sine() {
        let c = circle();
        let maps = [ChordMap::new(c.clone(), Angle::new(0.0)).unwrap(), ChordMap::new(c.clone(), Angle::new(PI / 2.0)).unwrap()];
        let seed = sin4(&c).restricted(IntervalSet::single(0.0, 0.25), vec![]);
        let f = propagate_density(&seed, &maps, &c, Coverage::Full).unwrap();
        for i in 0..200 {
            let s = (i as f64 + 0.37) / 200.0;
            assert!((f.eval(s).re - (4.0 * PI * s).sin()).abs() < 1e-12, "s={s}");
        }
        for m in &maps {
            assert!(eqfund_residual_grid(&f, &c, m.theta(), 129).unwrap() < 1e-12);
        }
        let zero = Density::zero(&c).restricted(IntervalSet::single(0.0, 0.25), vec![]);
        let g = propagate_density(&zero, &maps, &c, Coverage::Full).unwrap();
        assert!(g.l1_norm(&c) == 0.0);
        let short = sin4(&c).restricted(IntervalSet::single(0.0, 0.1), vec![]);
        assert!(matches!(propagate_density(&short, &maps, &c, Coverage::Full), Err(MeasureError::TilingGap { .. })));
    }

    #[test]
    fn circle_counterexamples() {
        for q in [2usize, 3] {
            let ce = construct_counterexample(&CounterexampleKind::CircleRational { q, profile: SeedProfile::Sine }).unwrap();
            let r = check_annihilation(&ce.density, &ce.curve, &ce.lines, (-50.0, 50.0), 201);
            assert!(r.max_moduli().iter().all(|&m| m <= 1e-8));
            assert!(ce.l1_norm >= 0.1);
            let s = 0.1234;
            assert!((ce.density.eval(s).re - (TAU * q as f64 * s).sin()).abs() < 1e-12);
            // Already a fixed point of both projections.
            for th in ce.lines {
                let m = ChordMap::new(ce.curve.clone(), th).unwrap();
                let p = project_density(&ce.density, &m);
                assert!((p.l1_norm(&ce.curve) - ce.l1_norm).abs() <= 1e-8);
            }
        }
        assert!(construct_counterexample(&CounterexampleKind::CircleRational { q: 1, profile: SeedProfile::Sine }).is_err());
    }

    #[test]
    fn hyperbola_counterexample() {
        let ce = construct_counterexample(&CounterexampleKind::HyperbolaPerpendicular {
            theta1: 3.0 * PI / 8.0,
            profile: SeedProfile::Bump,
        })
        .unwrap();
        let r = check_annihilation(&ce.density, &ce.curve, &ce.lines, (-50.0, 50.0), 201);
        assert!(r.max_moduli().iter().all(|&m| m <= 1e-6), "{:?}", r.max_moduli());
        assert!((ce.l1_norm - 1.0).abs() < 1e-12);
        let control = check_annihilation(&ce.density, &ce.curve, &[Angle::new(1.0)], (-50.0, 50.0), 101);
        assert!(control.lines[0].max_modulus > 1e-3);
    }

    #[test]
    fn generic_periodic_on_ellipse() {
        // The ellipse reduces to the circle pair (0, π/2), a 2-periodic map.
        let spec = CurveSpec::Ellipse { a: 2.0, b: 1.0, center: [0.0, 0.0], rotation: 0.0 };
        let orbit = PeriodicOrbit { p: 1, q: 2, points: vec![0.1, 0.6], residual: 0.0 };
        let kind = CounterexampleKind::GenericPeriodic {
            curve: spec.clone(),
            theta1: 0.0,
            theta2: PI / 2.0,
            orbit: orbit.clone(),
            profile: SeedProfile::Bump,
        };
        let ce = construct_counterexample(&kind).unwrap();
        let r = check_annihilation(&ce.density, &ce.curve, &ce.lines, (-30.0, 30.0), 121);
        assert!(r.max_moduli().iter().all(|&m| m <= 1e-8), "{:?}", r.max_moduli());
        let bad = CounterexampleKind::GenericPeriodic { curve: spec, theta1: 0.0, theta2: 1.0, orbit, profile: SeedProfile::Bump };
        assert!(matches!(construct_counterexample(&bad), Err(MeasureError::StructureAbsent(_))));
    }

    #[test]
    fn mass_invariance() {
        let c = circle();
        let odd = Density::real(&c, "odd", |s| (TAU * s).sin() + 0.4 * (3.0 * TAU * s).sin());
        let m = ChordMap::new(c.clone(), Angle::new(0.0)).unwrap();
        let (a, b) = mass_invariance_check(&odd, &m, (0.05, 0.2)).unwrap();
        assert!((a - b).abs() <= 1e-6 * odd.l1_norm(&c) && b > 0.1);
        let (x, y) = signed_mass_pair(&odd, &m, (0.05, 0.2)).unwrap();
        assert!((x + y).norm() < 1e-10);
        assert_eq!(mass_invariance_check(&Density::zero(&c), &m, (0.05, 0.2)).unwrap(), (0.0, 0.0));
        let one = Density::real(&c, "one", |_| 1.0);
        assert!(matches!(mass_invariance_check(&one, &m, (0.05, 0.2)), Err(MeasureError::RelationViolated { .. })));
    }

    #[test]
    fn linearity() {
        let c = circle();
        let f = Density::real(&c, "f", |s| (TAU * s).cos() + s);
        let g = Density::closed_form(&c, "g", |s| Complex64::new(0.0, (3.0 * TAU * s).sin()));
        let (a, b) = (Complex64::new(0.7, -0.2), Complex64::new(-1.3, 0.5));
        let h = f.combine(a, &g, b);
        let xi = Point2::new(4.0, -2.5);
        let lhs = fourier_transform(&h, &c, xi).unwrap();
        let rhs = a * fourier_transform(&f, &c, xi).unwrap() + b * fourier_transform(&g, &c, xi).unwrap();
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn grid_file_round_trip() {
        let c = circle();
        let f = sin4(&c);
        let file = f.to_file(&c, 512).unwrap();
        let g = Density::from_file(&file).unwrap();
        assert!((g.eval(0.3) - f.eval(0.3)).norm() < 1e-3);
        let json = serde_json::to_string(&file).unwrap();
        let back: DensityFile = serde_json::from_str(&json).unwrap();
        assert_eq!(back, file);
        let h = Curve::new(CurveSpec::HyperbolaStd { x_max: 50.0 }).unwrap();
        let bump = Density::real(&h, "b", |s| (-(s - 0.25) * (s - 0.25) * 400.0).exp());
        let file = bump.to_file(&h, 1024).unwrap();
        let back = Density::from_file(&file).unwrap();
        assert!((back.eval(0.25).re - 1.0).abs() < 1e-2);
        let mut broken = file.clone();
        broken.grid[3] += 1e-4;
        assert!(Density::from_file(&broken).is_err());
    }

    #[test]
    fn search_separates_circle_cases() {
        let c = circle();
        let cfg = SearchConfig { grid_size: 1024, iterations: 3000, ..SearchConfig::default() };
        let keep = annihilator_search(c.clone(), Angle::new(0.0), Angle::new(PI / 2.0), &cfg).unwrap();
        let decay = annihilator_search(c, Angle::new(0.0), Angle::new(1.0), &cfg).unwrap();
        assert!(keep.ratio >= 0.1, "{}", keep.ratio);
        assert!(decay.ratio <= 1e-3, "{}", decay.ratio);
        assert!(keep.residuals.iter().all(|&r| r < 1e-9));
    }
}
