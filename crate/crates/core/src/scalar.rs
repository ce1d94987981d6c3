//! Floating-point abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar the pipeline computes in: `f32` or `f64`.
///
/// Gradient checks and the acceptance tolerances assume `f64`; `f32` is
/// supported for inference and quick experiments.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal; panics only if the target cannot represent finite values.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("scalar conversion from f64")
    }

    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("scalar conversion from usize")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
