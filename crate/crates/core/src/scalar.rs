//! Floating-point abstraction for the whole crate.
//!
//! Every algorithm here is scalar numerics: quadrature, natural-parameter
//! updates, Newton steps, inequality evaluation. All of it is written against
//! the [`Scalar`] trait so the same code runs in `f64` (the default used by
//! the CLI and the certificate pipeline) or `f32` (useful for quick
//! exploration of precision sensitivity).

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumAssignOps};

/// The scalar type the solvers and certificates are generic over.
///
/// A blanket implementation covers `f32` and `f64`; any IEEE float with the
/// listed capabilities works.
pub trait Scalar:
    Float + FromPrimitive + NumAssignOps + Debug + Display + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + NumAssignOps + Debug + Display + Send + Sync + 'static
{
}

/// Converts an `f64` literal into the working scalar type.
///
/// Panics only if the target type cannot represent the value at all, which
/// cannot happen for the finite literals used in this crate.
#[inline]
pub fn lit<F: Scalar>(value: f64) -> F {
    F::from_f64(value).expect("float literal must be representable")
}

/// Largest of two scalars, avoiding NaN propagation surprises in folds.
#[inline]
pub fn fmax<F: Scalar>(a: F, b: F) -> F {
    if a > b {
        a
    } else {
        b
    }
}
