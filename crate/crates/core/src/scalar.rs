//! Scalar abstraction for the numeric kernels.
//!
//! Everything numeric in this crate is generic over [`Scalar`], which is any
//! floating-point type with the conversions the solvers need. `f64` is what
//! the CLI and the concrete aliases at the crate root use; `f32` works for
//! the smaller kernels but the default tolerances are tuned for `f64`.

use num_traits::{Float, FromPrimitive, ToPrimitive};

pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + std::iter::Sum
    + std::fmt::Debug
    + std::fmt::Display
    + Send
    + Sync
    + 'static
{
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + std::iter::Sum
        + std::fmt::Debug
        + std::fmt::Display
        + Send
        + Sync
        + 'static
{
}

/// Cast an `f64` constant into the working scalar type.
#[inline]
pub fn cast<F: Scalar>(x: f64) -> F {
    F::from_f64(x).expect("constant must be representable in the scalar type")
}

/// Cast an integer count into the working scalar type.
#[inline]
pub fn cast_u64<F: Scalar>(x: u64) -> F {
    F::from_u64(x).expect("count must be representable in the scalar type")
}

/// Lossy conversion back to `f64` for reporting.
#[inline]
pub fn to_f64<F: Scalar>(x: F) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
