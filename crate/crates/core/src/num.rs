//! Scalar abstraction shared by the numeric modules.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_rational::Ratio;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type the model is evaluated in: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` constant; infallible for the implemented types.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_ratio(r: Ratio<i64>) -> Self {
        Self::lit(*r.numer() as f64) / Self::lit(*r.denom() as f64)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// dBm (or dB) to linear milliwatts (or ratio).
pub fn db_to_linear<S: Scalar>(db: S) -> S {
    S::lit(10.0).powf(db / S::lit(10.0))
}

/// Linear to dB. Zero maps to negative infinity.
pub fn linear_to_db<S: Scalar>(lin: S) -> S {
    S::lit(10.0) * lin.log10()
}
