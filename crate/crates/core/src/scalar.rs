//! Scalar abstraction shared by the numerical modules.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use ndarray::ScalarOperand;
use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point type the analytics are written against: `f32` or `f64`.
///
/// The two tolerance hooks let invariant checks scale with the precision of
/// the type instead of hard-coding double-precision thresholds.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + ScalarOperand
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Tolerance for exact structural properties (symmetry, unit diagonal).
    fn tight_tol() -> Self;
    /// Tolerance for results of iterative algorithms (reconstruction, PSD).
    fn loose_tol() -> Self;

    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    fn tight_tol() -> Self {
        1e-12
    }
    fn loose_tol() -> Self {
        1e-8
    }
}

impl Real for f32 {
    fn tight_tol() -> Self {
        1e-5
    }
    fn loose_tol() -> Self {
        1e-3
    }
}
