//! Chord-map dynamics on plane curves and the annihilating measures they govern.
//!
//! A pair (curve, set of lines through the origin) is a Heisenberg uniqueness
//! pair when the only finite measure on the curve whose Fourier transform
//! vanishes on the lines is zero. For two lines the question reduces to the
//! dynamics of the composition of two chord involutions, which this crate
//! builds, iterates and certifies, and then cross-checks against direct
//! Fourier and Radon computations.
//!
//! Layout:
//!
//! - [`curve`]: curve families, projections, corner cones.
//! - [`chordmap`]: projection splits, level sets, chord involutions.
//! - [`dynamics`]: circle lifts, rotation numbers, interval certificates.
//! - [`measure`]: densities, Fourier transforms, counterexamples, the
//!   alternating-projection annihilator search.
//! - [`transform`]: the projective hyperbola-to-circle transfer, ellipse
//!   reduction, Radon slices.
//!
//! Grid sweeps run on rayon when the default `parallel` feature is on and
//! fall back to plain iterators otherwise. Results are identical either way.

// `!(a < b)` is how validation rejects NaN along with out-of-order values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chordmap;
pub mod curve;
pub mod dynamics;
pub mod intervals;
pub mod measure;
pub mod par;
pub mod quad;
pub mod roots;
pub mod transform;

pub use chordmap::{ChordError, ChordMap, CuspMaps, ProjectionSplit};
pub use dynamics::{CircleMapLift, DynamicsError, IntervalCertificate, RotationEstimate};
pub use curve::{Angle, Curve, CurveError, CurveSpec, Point2};
pub use measure::{AnnihilationReport, Density, MeasureError};
pub use transform::{PivotPoint, RadonSlice, TransformError};
