//! Scalar abstractions.
//!
//! Geometry and P1 assembly only need field arithmetic, so they are written
//! against [`Scalar`] and run unchanged on exact rationals. Everything that
//! takes square roots or evaluates transcendental sources (solvers, right-hand
//! sides) needs [`Real`], which is satisfied by `f32` and `f64`.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, Num, NumAssign, Signed, ToPrimitive};

/// Field-like scalar usable for exact assembly (`f64`, `f32`, `Ratio<i64>`, ...).
pub trait Scalar: Num + Signed + Copy + PartialOrd + FromPrimitive + Debug + Send + Sync + 'static {
    fn from_int(v: i64) -> Self {
        Self::from_i64(v).expect("integer not representable in scalar type")
    }

    fn ratio(num: i64, den: i64) -> Self {
        Self::from_int(num) / Self::from_int(den)
    }
}

impl<T> Scalar for T where
    T: Num + Signed + Copy + PartialOrd + FromPrimitive + Debug + Send + Sync + 'static
{
}

/// Floating-point scalar for iterative solvers and spectral work.
pub trait Real: Scalar + Float + NumAssign + ToPrimitive + Sum + Display + LowerExp {
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 not representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar not representable as f64")
    }
}

impl<T> Real for T where T: Scalar + Float + NumAssign + ToPrimitive + Sum + Display + LowerExp {}
