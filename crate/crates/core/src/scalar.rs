//! Floating-point scalar abstraction for solver arithmetic.
//!
//! Distances and route costs stay integral throughout the crate; everything
//! downstream of the LP relaxation (duals, reduced costs, simplex tableaus)
//! is generic over [`Scalar`]. The type aliases at the crate root pin `f64`,
//! which is what the CLI and the benchmark harness use.

use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating-point scalar used for LP arithmetic, duals, and reduced costs.
pub trait Scalar:
    num_traits::Float + Sum + Debug + Display + Send + Sync + 'static
{
    fn from_f64(value: f64) -> Self {
        num_traits::NumCast::from(value).expect("f64 value not representable in scalar type")
    }

    fn from_i64(value: i64) -> Self {
        num_traits::NumCast::from(value).expect("i64 value not representable in scalar type")
    }

    fn from_usize(value: usize) -> Self {
        num_traits::NumCast::from(value).expect("usize value not representable in scalar type")
    }

    fn to_f64(self) -> f64 {
        num_traits::NumCast::from(self).expect("scalar value not representable as f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
