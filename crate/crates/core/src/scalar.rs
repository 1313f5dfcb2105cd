//! Scalar abstraction for the tensor and proximal-operator layers.
//!
//! The multilinear algebra and the shrinkage operators are written once,
//! generic over [`Scalar`], and instantiated at `f32` or `f64`. The solver
//! pipeline and the file formats are fixed to `f64`: the target relative
//! errors around 1e-8 are out of reach in single precision, and the binary
//! formats store 64-bit IEEE-754 values.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, NumAssign};

/// Floating-point scalar usable by the tensor and prox layers.
///
/// This is a trait bundle; `f32` and `f64` implement it and nothing else is
/// expected to.
pub trait Scalar:
    Float + NumAssign + Sum<Self> + Debug + Display + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: Float + NumAssign + Sum<Self> + Debug + Display + Send + Sync + 'static
{
}

/// Converts an `f64` constant into the working scalar type.
///
/// Lossy for `f32` in the usual rounding sense, which is acceptable for the
/// tolerances and algorithm constants this is used for.
#[inline]
pub(crate) fn cast<T: Scalar>(x: f64) -> T {
    T::from(x).expect("f64 constant representable in scalar type")
}
