//! Generic scalar abstraction over the floating-point types the library
//! supports (`f32`, `f64`).
//!
//! All numerical modules are written against [`Real`] so the same code can
//! run in single or double precision. The concrete aliases at the crate root
//! fix `f64`, which is what the simulation engine and the CLI use.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssignOps};

/// Floating-point scalar usable throughout the library.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssignOps + Sum<Self> + Debug + Display + Send + Sync + 'static
{
    /// Lift an `f64` literal into the scalar type.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 literal representable in scalar type")
    }

    /// Lift a `usize` count into the scalar type.
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + NumAssignOps
        + Sum<T>
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gm<T: Real>(a: T, b: T) -> T {
        (a * b).sqrt()
    }

    #[test]
    fn works_for_both_widths() {
        assert!((gm(2.0_f64, 8.0) - 4.0).abs() < 1e-12);
        assert!((gm(2.0_f32, 8.0) - 4.0).abs() < 1e-6);
        assert_eq!(f64::of(1.5), 1.5);
        assert_eq!(f32::of_usize(3), 3.0);
    }
}
