//! Scalar abstraction for the deterministic parts of the crate.
//!
//! The limit construction, the regime formulas and the sweep ODE are
//! written once against [`Scalar`] and instantiated for `f32` and `f64`.
//! The stochastic simulator works in `f64` only.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};

/// Floating point types the deterministic engines can run on.
pub trait Scalar: Float + FromPrimitive + Debug + Display + Default + Send + Sync + 'static {
    /// Converts an `f64` literal into this type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// Converts a signed integer exponent or index.
    #[inline]
    fn from_int(i: i64) -> Self {
        Self::from_i64(i).expect("integer representable in scalar type")
    }

    /// Relative tolerance used when two event candidates are compared for
    /// a tie. Never tighter than a few ulps of the type.
    #[inline]
    fn tie_tolerance() -> Self {
        Self::lit(1e-9).max(Self::epsilon() * Self::lit(64.0))
    }

    /// Lossy conversion for reporting.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
