//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating point type the toolkit can run on (`f32` or `f64`).
///
/// Linear algebra goes through nalgebra, so the bound is `RealField`;
/// conversions come from num-traits.
pub trait Real:
    RealField + FromPrimitive + ToPrimitive + Copy + Display + LowerExp + Debug + Send + Sync
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Literal conversion. Panics only for values the target type cannot hold,
/// which never happens for the finite constants used in this crate.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("finite literal")
}

#[inline]
pub fn from_usize<T: Real>(x: usize) -> T {
    T::from_usize(x).expect("index fits in scalar")
}

#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// `RealField` exposes `abs` twice (via `ComplexField` and `Signed`).
#[inline]
pub fn abs<T: Real>(x: T) -> T {
    <T as nalgebra::ComplexField>::abs(x)
}

#[inline]
pub fn is_finite<T: Real>(x: T) -> bool {
    to_f64(x).is_finite()
}

/// Largest absolute entry, zero for an empty slice.
pub fn max_abs<T: Real>(xs: &[T]) -> T {
    xs.iter().fold(T::zero(), |m, &x| m.max(abs(x)))
}

/// Wrap an angle to the principal branch (-pi, pi].
pub fn principal_angle<T: Real>(theta: T) -> T {
    let two_pi = T::two_pi();
    let mut t = theta % two_pi;
    if t <= -T::pi() {
        t += two_pi;
    } else if t > T::pi() {
        t -= two_pi;
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn principal_branch() {
        let pi = std::f64::consts::PI;
        assert!((principal_angle(3.0 * pi) - pi).abs() < 1e-12);
        assert!((principal_angle(-pi) - pi).abs() < 1e-12);
        assert!((principal_angle(0.3 + 4.0 * pi) - 0.3).abs() < 1e-12);
        assert!((principal_angle(-0.3f32) + 0.3).abs() < 1e-6);
    }

    #[test]
    fn max_abs_of_empty_is_zero() {
        assert_eq!(max_abs::<f64>(&[]), 0.0);
        assert_eq!(max_abs(&[1.0, -3.0, 2.0]), 3.0);
    }
}
