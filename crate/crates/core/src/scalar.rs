//! Floating-point abstraction for the numeric kernels.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use ndarray::ScalarOperand;
use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Scalar type the solvers are generic over. Implemented for `f32` and `f64`.
pub trait Scalar:
    Float
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Sum
    + ScalarOperand
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Conversion from an `f64` literal, for constants and tolerances.
    fn real(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 constant")
    }

    /// A feasibility tolerance: `base` floored at a small multiple of the
    /// machine epsilon, so double-precision checks keep their nominal values
    /// while narrower scalars get a representable bound.
    fn feasibility_tol(base: f64) -> Self {
        Self::real(base).max(Self::epsilon() * Self::real(64.0))
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
