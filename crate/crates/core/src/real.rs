//! Scalar abstraction. Everything in this crate is generic over [`Real`],
//! implemented for `f32` and `f64`; the crate root exports `f64` aliases.

use rand::Rng;

/// Floating-point scalar used throughout the crate.
pub trait Real:
    num_traits::Float
    + num_traits::FloatConst
    + num_traits::FromPrimitive
    + core::fmt::Debug
    + core::fmt::Display
    + core::iter::Sum
    + 'static
{
    /// Convert an `f64` constant into `Self`. Panics if unrepresentable.
    #[inline]
    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("constant not representable in scalar type")
    }

    /// `self` widened to `f64`, for diagnostics and serialization.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Draw one standard-normal sample from `rng`.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl Real for f32 {
    #[inline]
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(rand_distr::StandardNormal)
    }
}

impl Real for f64 {
    #[inline]
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(rand_distr::StandardNormal)
    }
}
