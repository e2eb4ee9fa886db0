//! Scalar abstraction for the model kernels.
//!
//! All closed-form quantities are generic over the floating-point type; the
//! crate root pins `f64` aliases for the sampling pipeline.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar the model evaluates on: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Natural log of the gamma function.
    fn ln_gamma(self) -> Self;

    /// Cast an `f64` constant into this scalar type.
    #[inline]
    fn cst(v: f64) -> Self {
        Self::from_f64(v).expect("constant not representable")
    }
}

impl Real for f64 {
    #[inline]
    fn ln_gamma(self) -> Self {
        statrs::function::gamma::ln_gamma(self)
    }
}

impl Real for f32 {
    #[inline]
    fn ln_gamma(self) -> Self {
        statrs::function::gamma::ln_gamma(self as f64) as f32
    }
}

/// Dot product of two equal-length slices.
#[inline]
pub(crate) fn dot<F: Real>(a: &[F], b: &[F]) -> F {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b.iter())
        .fold(F::zero(), |acc, (&x, &y)| acc + x * y)
}
