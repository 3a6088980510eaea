//! Scalar abstraction for the geometric kernel.
//!
//! The low-level geometry (vectors, simplices, quadrature, ball cubature,
//! dual weights, simplex clipping) is written against [`Real`] so it can be
//! instantiated for `f32` or `f64`. Mesh, finite element and projector code
//! is concrete in `f64`; see the aliases at the crate root.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumAssign};

/// Floating point scalar usable by the geometric kernel.
pub trait Real:
    Float + FromPrimitive + NumAssign + Copy + Default + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable")
    }

    /// Conversion from a count.
    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    #[inline]
    fn pi() -> Self {
        Self::lit(std::f64::consts::PI)
    }

    fn to_f64_lossy(self) -> f64;
}

impl Real for f32 {
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self
    }
}
