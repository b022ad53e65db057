//! Scalar abstractions.
//!
//! Lattice aggregates only need ring operations plus ordering, so they are
//! written against [`Field`] and can be evaluated exactly in rational
//! arithmetic. Everything that takes square roots or draws random numbers
//! works over [`Real`], implemented for `f32` and `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, Num, ToPrimitive};

/// Ordered exact-or-floating arithmetic (`f32`, `f64`, `Ratio<i64>`, ...).
pub trait Field: Num + Copy + PartialOrd + FromPrimitive + Debug + Send + Sync + 'static {
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count representable in scalar type")
    }

    fn max_of(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }
}

impl<T> Field for T where T: Num + Copy + PartialOrd + FromPrimitive + Debug + Send + Sync + 'static {}

/// Floating-point scalar used by sampling, moments and estimators.
pub trait Real: Field + Float + ToPrimitive + Sum + Display + Default {
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite float converts to f64")
    }
}

impl<T> Real for T where T: Field + Float + ToPrimitive + Sum + Display + Default {}
