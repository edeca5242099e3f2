//! Scalar abstraction shared by every numeric module.
//!
//! All of the physics is written against [`Real`], so the same code runs in
//! `f64` (the default, see the aliases in the crate root) or `f32` for quick
//! low-precision scans.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point type usable by the simulator: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Default
    + Debug
    + Display
    + LowerExp
    + Sum
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Every `f64` is representable (possibly rounded) in both
    /// supported types, so this never fails.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_index(i: usize) -> Self {
        Self::from_usize(i).expect("index representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }

    /// Machine epsilon scaled to a loose "numerically zero" threshold.
    #[inline]
    fn tiny() -> Self {
        Self::epsilon() * Self::lit(64.0)
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub type Cplx<T> = Complex<T>;

#[inline]
pub fn c<T: Real>(re: T, im: T) -> Cplx<T> {
    Complex::new(re, im)
}

#[inline]
pub fn cr<T: Real>(re: T) -> Cplx<T> {
    Complex::new(re, T::zero())
}

/// Converts an ordinary frequency in MHz into an angular frequency in rad/µs.
#[inline]
pub fn angular_from_mhz<T: Real>(nu_mhz: T) -> T {
    T::TAU() * nu_mhz
}

/// Inverse of [`angular_from_mhz`].
#[inline]
pub fn mhz_from_angular<T: Real>(omega: T) -> T {
    omega / T::TAU()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mhz_round_trip() {
        let w = angular_from_mhz(10.7_f64);
        assert!((w - 67.23008278682157).abs() < 1e-12);
        assert!((mhz_from_angular(w) - 10.7).abs() < 1e-14);
        let w32 = angular_from_mhz(10.7_f32);
        assert!((w32 - 67.230_08).abs() < 1e-4);
    }
}
