use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An open interval `(lo, hi)` of the real line. Either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || !(lo < hi) {
            return Err(Error::InvalidInterval { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    /// Interval spanned by two distinct endpoints in either order.
    pub fn spanning(a: f64, b: f64) -> Result<Self> {
        Self::new(a.min(b), a.max(b))
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        self.probe_window().midpoint_finite()
    }

    fn midpoint_finite(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        other.lo >= self.lo && other.hi <= self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        Interval::new(self.lo.max(other.lo), self.hi.min(other.hi)).ok()
    }

    /// Finite window used for sampling. Infinite ends are replaced by a point
    /// sixteen scale units away from the finite end (or from 0).
    pub fn probe_window(&self) -> Interval {
        match (self.lo.is_finite(), self.hi.is_finite()) {
            (true, true) => *self,
            (true, false) => Interval {
                lo: self.lo,
                hi: self.lo + 16.0 * self.lo.abs().max(1.0),
            },
            (false, true) => Interval {
                lo: self.hi - 16.0 * self.hi.abs().max(1.0),
                hi: self.hi,
            },
            (false, false) => Interval { lo: -16.0, hi: 16.0 },
        }
    }

    /// `n` equispaced interior points `lo + (i+1)·w/(n+1)` of the probe window.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        let w = self.probe_window();
        let step = w.width() / (n as f64 + 1.0);
        (1..=n).map(|i| w.lo + step * i as f64).collect()
    }
}

impl TryFrom<[f64; 2]> for Interval {
    type Error = Error;

    fn try_from(v: [f64; 2]) -> Result<Self> {
        Interval::new(v[0], v[1])
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}

impl std::fmt::Display for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.lo, self.hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_nan() {
        assert!(Interval::new(1.0, 1.0).is_err());
        assert!(Interval::new(2.0, 1.0).is_err());
        assert!(Interval::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn grid_is_interior() {
        let i = Interval::new(0.0, 1.0).unwrap();
        let g = i.grid(3);
        assert_eq!(g, vec![0.25, 0.5, 0.75]);
        assert!(g.iter().all(|&x| i.contains(x)));
    }

    #[test]
    fn half_line_probe_window() {
        let i = Interval::new(0.0, f64::INFINITY).unwrap();
        let w = i.probe_window();
        assert_eq!(w.lo(), 0.0);
        assert_eq!(w.hi(), 16.0);
        assert!(i.grid(8).iter().all(|&x| x > 0.0 && x < 16.0));
    }
}
