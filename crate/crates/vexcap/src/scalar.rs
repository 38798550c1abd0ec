use std::fmt;
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar the whole crate is generic over: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum<Self> + fmt::Debug + fmt::Display + Send + Sync + 'static
{
    /// Lossy conversion from `f64`, for numeric literals in generic code.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 literal must convert")
    }

    /// Lossy view as `f64`, for reporting and CSV output.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar must convert to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
