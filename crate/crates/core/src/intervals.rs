//! Finite unions of closed real intervals.

use serde::{Deserialize, Serialize};

/// Pieces shorter than this are dropped after set operations.
const SLIVER: f64 = 1e-13;

/// A sorted union of pairwise disjoint intervals `[lo, hi]`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IntervalSet {
    parts: Vec<(f64, f64)>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Sorts and merges overlapping or touching parts; reversed pairs are
    /// swapped and degenerate ones dropped.
    pub fn new<I: IntoIterator<Item = (f64, f64)>>(parts: I) -> Self {
        let mut v: Vec<(f64, f64)> = parts
            .into_iter()
            .map(|(a, b)| if a <= b { (a, b) } else { (b, a) })
            .filter(|(a, b)| b - a > SLIVER)
            .collect();
        v.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(v.len());
        for (a, b) in v {
            match out.last_mut() {
                Some(last) if a <= last.1 + SLIVER => last.1 = last.1.max(b),
                _ => out.push((a, b)),
            }
        }
        Self { parts: out }
    }

    pub fn single(lo: f64, hi: f64) -> Self {
        Self::new([(lo, hi)])
    }

    pub fn parts(&self) -> &[(f64, f64)] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.parts.iter().map(|(a, b)| b - a).sum()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.parts.iter().any(|&(a, b)| a <= x && x <= b)
    }

    /// Index of the part containing `x`.
    pub fn locate(&self, x: f64) -> Option<usize> {
        self.parts.iter().position(|&(a, b)| a <= x && x <= b)
    }

    pub fn union(&self, other: &Self) -> Self {
        Self::new(self.parts.iter().chain(other.parts.iter()).copied())
    }

    pub fn intersect(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        for &(a, b) in &self.parts {
            for &(c, d) in &other.parts {
                let lo = a.max(c);
                let hi = b.min(d);
                if hi > lo {
                    out.push((lo, hi));
                }
            }
        }
        Self::new(out)
    }

    pub fn difference(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        for &(a, b) in &self.parts {
            let mut cur = vec![(a, b)];
            for &(c, d) in &other.parts {
                let mut next = Vec::new();
                for (x, y) in cur {
                    if d <= x || c >= y {
                        next.push((x, y));
                        continue;
                    }
                    if c > x {
                        next.push((x, c));
                    }
                    if d < y {
                        next.push((d, y));
                    }
                }
                cur = next;
            }
            out.extend(cur);
        }
        Self::new(out)
    }

    /// Folds parts into the window `[lo, lo + period)`, splitting any part
    /// that crosses the window edge.
    pub fn wrapped(&self, lo: f64, period: f64) -> Self {
        let mut out = Vec::new();
        for &(a, b) in &self.parts {
            if b - a >= period - SLIVER {
                return Self::single(lo, lo + period);
            }
            let shift = ((a - lo) / period).floor() * period;
            let (a, b) = (a - shift, b - shift);
            if b <= lo + period {
                out.push((a, b));
            } else {
                out.push((a, lo + period));
                out.push((lo, b - period));
            }
        }
        Self::new(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_and_measure() {
        let s = IntervalSet::new([(0.5, 0.7), (0.0, 0.2), (0.1, 0.3)]);
        assert_eq!(s.parts(), &[(0.0, 0.3), (0.5, 0.7)]);
        assert!((s.measure() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn difference_splits() {
        let s = IntervalSet::single(0.0, 1.0).difference(&IntervalSet::single(0.25, 0.5));
        assert_eq!(s.parts(), &[(0.0, 0.25), (0.5, 1.0)]);
    }

    #[test]
    fn wrap_crossing_part() {
        let s = IntervalSet::single(0.9, 1.2).wrapped(0.0, 1.0);
        assert_eq!(s.parts().len(), 2);
        assert!((s.measure() - 0.3).abs() < 1e-12);
    }
}
