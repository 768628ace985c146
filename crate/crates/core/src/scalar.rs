//! Scalar abstraction shared by every geometric kernel.
//!
//! All pointwise formulas are written once against [`Real`], so the same code
//! path evaluates on `f64`/`f32` grids, on forward-mode [`Dual`](crate::Dual)
//! numbers (linearization) and on reverse-mode [`Var`](crate::Var) tape
//! scalars (exact discrete adjoint).

use std::fmt::Debug;

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating point scalar usable by the geometry kernels.
pub trait Real: Float + FloatConst + FromPrimitive + Debug + 'static {
    /// Primal value as `f64` (the real part for AD scalars).
    #[inline]
    fn value(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Real for T where T: Float + FloatConst + FromPrimitive + Debug + 'static {}

/// Converts an `f64` literal into `T`.
#[inline(always)]
pub fn c<T: Real>(x: f64) -> T {
    T::from_f64(x).unwrap()
}

/// Lifts a scalar of one type into another through its primal value.
#[inline]
pub fn cast<S: Real, T: Real>(x: S) -> T {
    c(x.value())
}
