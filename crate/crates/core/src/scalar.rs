//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real floating point scalar: `f32` or `f64`.
///
/// Tolerances throughout the crate are stated for `f64`; the `f32`
/// instantiation is supported for the grid and operator layers, where the
/// algorithms do not depend on double precision.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable")
    }

    /// Converts a count or index.
    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("index representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Sign as `+1` / `-1` (zero maps to `+1`).
    #[inline]
    fn signum_i8(self) -> i8 {
        if self < Self::zero() {
            -1
        } else {
            1
        }
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Max-abs of a slice (0 for empty input).
pub fn max_abs<T: Real>(values: &[T]) -> T {
    values.iter().fold(T::zero(), |acc, &v| acc.max(v.abs()))
}

/// Euclidean dot product.
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}
