//! Exact rational intervals and rectangles on the unit torus, and their
//! overlaps with the `1/N` lattice cells centred on lattice points.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Rational;

/// Half-open interval `[lo, hi)` with `0 ≤ lo < hi ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub lo: Rational,
    pub hi: Rational,
}

impl Interval {
    pub fn new(lo: Rational, hi: Rational) -> Result<Self> {
        if lo < Rational::zero() || hi > Rational::one() || lo >= hi {
            return Err(Error::InvalidPartition(format!("interval [{lo}, {hi}) outside [0, 1] or empty")));
        }
        Ok(Self { lo, hi })
    }

    pub fn unit() -> Self {
        Self { lo: Rational::zero(), hi: Rational::one() }
    }

    pub fn len(&self) -> Rational {
        self.hi - self.lo
    }

    pub fn contains(&self, x: Rational) -> bool {
        self.lo <= x && x < self.hi
    }

    pub fn contains_f64(&self, x: f64) -> bool {
        let lo = ratio_f64(&self.lo);
        let hi = ratio_f64(&self.hi);
        lo <= x && x < hi
    }

    /// Length of `self ∩ [a, b)` on the real line.
    pub fn overlap_line(&self, a: Rational, b: Rational) -> Rational {
        let lo = self.lo.max(a);
        let hi = self.hi.min(b);
        if hi > lo {
            hi - lo
        } else {
            Rational::zero()
        }
    }

    /// Length of the overlap with the cell `[(k − ½)/N, (k + ½)/N)` mod 1.
    pub fn cell_overlap(&self, k: u64, n: u64) -> Rational {
        let n = n as i128;
        let a = Rational::new(2 * k as i128 - 1, 2 * n);
        let b = Rational::new(2 * k as i128 + 1, 2 * n);
        let one = Rational::one();
        // the cell spans at most one wrap; shifts by ±1 cover it
        self.overlap_line(a, b) + self.overlap_line(a - one, b - one) + self.overlap_line(a + one, b + one)
    }
}

/// Axis-aligned rectangle `[x.lo, x.hi) × [y.lo, y.hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x: Interval,
    pub y: Interval,
}

impl Rect {
    pub fn new(x: Interval, y: Interval) -> Self {
        Self { x, y }
    }

    pub fn area(&self) -> Rational {
        self.x.len() * self.y.len()
    }

    pub fn contains_f64(&self, p: [f64; 2]) -> bool {
        self.x.contains_f64(p[0]) && self.y.contains_f64(p[1])
    }

    pub fn intersects(&self, other: &Rect) -> bool {
        let ox = self.x.overlap_line(other.x.lo, other.x.hi);
        let oy = self.y.overlap_line(other.y.lo, other.y.hi);
        !ox.is_zero() && !oy.is_zero()
    }

    /// `N² · μ(cell(ℓ) ∩ self)` for the cell centred on `(k1, k2) / N`.
    pub fn cell_weight(&self, k1: u64, k2: u64, n: u64) -> Rational {
        let scale = Rational::from_integer(n as i128);
        self.x.cell_overlap(k1, n) * scale * self.y.cell_overlap(k2, n) * scale
    }
}

pub(crate) fn ratio_f64(q: &Rational) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}
