//! Scalar abstraction for the numeric kernels.
//!
//! Everything that does arithmetic on coordinates, targets or weights is
//! written once over [`Scalar`] and instantiated at `f64` for the pipeline
//! (see [`crate::Real`]) and at `f32` where the artifact format stores
//! 32-bit weights. The gradient check instantiates the same MLP code at
//! `f64`, which is the main reason this is a trait and not a fixed alias.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossless where possible; `f64 -> f32` rounds to nearest.
    fn from_real(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("finite f64 converts to any Scalar")
    }

    /// Exact for `f32 -> f64`.
    fn to_real(self) -> f64 {
        <Self as ToPrimitive>::to_f64(&self).expect("Scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
