//! Floating-point abstraction shared by the geometric and energy code.
//!
//! Positions, distances and joules are generic over [`Scalar`] so the same
//! simulator runs in `f32` or `f64`. Rates and the event clock never use it:
//! rates are fixed-point ([`crate::Rate`]) and time is integer milliseconds.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal or config value into this scalar.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 value representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
