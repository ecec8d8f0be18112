//! Scalar abstraction shared by the floating-point parts of the crate.
//!
//! Everything that evaluates transcendental functions (spectral data,
//! diameters, torus distances, observables, entropies) is generic over
//! [`Real`]. Lattice dynamics stays in exact integers and cell overlaps in
//! exact [`Rational`]s.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_rational::Ratio;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from `f64`, used for literal constants.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    fn from_int(x: i64) -> Self {
        Self::from_i64(x).expect("integer fits in float")
    }

    fn count(x: usize) -> Self {
        <Self as FromPrimitive>::from_usize(x).expect("integer fits in float")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Exact rational used for partition endpoints and cell-overlap weights.
pub type Rational = Ratio<i128>;

/// Converts an exact rational to the nearest representable real.
pub fn rational_to_real<R: Real>(q: &Rational) -> R {
    R::from_i128(*q.numer()).expect("numerator fits") / R::from_i128(*q.denom()).expect("denominator fits")
}

/// Fractional part mapped into `[0, 1)`.
#[inline]
pub fn frac<R: Real>(x: R) -> R {
    let f = x - x.floor();
    // x slightly below an integer can round up to exactly 1.0
    if f >= R::one() {
        R::zero()
    } else {
        f
    }
}
