//! Scalar abstraction shared by the metric, fitness and search layers.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real number type the numeric code is generic over.
///
/// Implemented for `f32` and `f64`. Fitness and metric values are ratios of
/// integer position sums, so both widths represent them exactly up to their
/// mantissa limits.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossless-enough conversion from a count.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable as float")
    }

    /// Conversion from an `f64` literal or input value.
    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 representable")
    }

    fn half() -> Self {
        Self::from_f64_lossy(0.5)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
