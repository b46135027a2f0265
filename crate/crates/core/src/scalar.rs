//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point element type for parameter vectors: `f32` or `f64`.
///
/// The simulator and CLI run on `f64`; `f32` is supported by the vector,
/// aggregation and task code so the rules can be exercised at lower precision.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`; rounds to nearest for `f32`.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("every f64 converts to a float type")
    }

    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("every usize converts to a float type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
