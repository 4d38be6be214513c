//! Scalar abstraction shared by every numeric routine in the crate.

use nalgebra::RealField;
use num_traits::ToPrimitive;

/// Real scalar usable as a jet coefficient and inside dense solves.
///
/// Implemented for `f32` and `f64`. The pipeline tolerances are tuned for
/// `f64`; `f32` is supported by the algebra but not by the acceptance gates.
pub trait Real: RealField + Copy + ToPrimitive {}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    nalgebra::convert(x)
}

/// Lossy conversion back to `f64`, used for tolerance decisions and reports.
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    ToPrimitive::to_f64(&x).unwrap_or(f64::NAN)
}

/// Totally skew symbol on three indices with `eps(0, 1, 2) = 1`.
#[inline]
pub fn eps(i: usize, j: usize, k: usize) -> i32 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1,
        _ => 0,
    }
}

/// `eps` lifted to the scalar type.
#[inline]
pub fn epsf<T: Real>(i: usize, j: usize, k: usize) -> T {
    lit(eps(i, j, k) as f64)
}

#[inline]
pub fn delta<T: Real>(i: usize, j: usize) -> T {
    if i == j {
        T::one()
    } else {
        T::zero()
    }
}
