//! Floating-point scalar abstraction shared by every numeric module.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// A real scalar usable for probabilities, entropies and rates: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Probabilities below this are treated as exact zeros in entropy sums.
    const ZERO_MASS: f64;

    /// Absolute tolerance used when checking that tables are normalized.
    const NORMALIZATION_TOL: f64;

    /// Lossy conversion from `f64`.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to every Scalar")
    }

    /// Widening conversion to `f64`.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Scalar converts to f64")
    }
}

impl Scalar for f64 {
    const ZERO_MASS: f64 = 1e-15;
    const NORMALIZATION_TOL: f64 = 1e-12;
}

impl Scalar for f32 {
    // f32 cannot resolve 1e-15 or 1e-12; scale to its epsilon.
    const ZERO_MASS: f64 = 1e-12;
    const NORMALIZATION_TOL: f64 = 1e-5;
}
