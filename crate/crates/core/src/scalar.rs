use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar used throughout the transforms. Implemented for `f32` and `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + rustfft::FftNum
    + 'static
{
    fn of(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 is representable")
    }

    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).expect("finite scalar")
    }

    fn of_usize(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("usize is representable")
    }

    fn of_i64(n: i64) -> Self {
        <Self as FromPrimitive>::from_i64(n).expect("i64 is representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `e^{i theta}`.
#[inline]
pub fn cis<T: Real>(theta: T) -> Complex<T> {
    Complex::new(theta.cos(), theta.sin())
}

/// `e^{i pi t}` for a phase measured in half-turns.
///
/// The argument is reduced modulo 2 in f64 before the trig call, so large
/// integer-valued phases stay exact.
#[inline]
pub fn cis_pi<T: Real>(half_turns: f64) -> Complex<T> {
    let r = half_turns.rem_euclid(2.0);
    // exact values at the quarter points keep unimodular signs clean
    if r == 0.0 {
        return Complex::new(T::one(), T::zero());
    }
    if r == 1.0 {
        return Complex::new(-T::one(), T::zero());
    }
    if r == 0.5 {
        return Complex::new(T::zero(), T::one());
    }
    if r == 1.5 {
        return Complex::new(T::zero(), -T::one());
    }
    let th = r * std::f64::consts::PI;
    Complex::new(T::of(th.cos()), T::of(th.sin()))
}

/// Normalised sinc, `sin(pi t) / (pi t)`.
pub fn sinc<T: Real>(t: T) -> T {
    if t.abs() < T::of(1e-8) {
        let pt = T::PI() * t;
        T::one() - pt * pt / T::of(6.0)
    } else {
        (T::PI() * t).sin() / (T::PI() * t)
    }
}

pub(crate) fn c64_of<T: Real>(z: Complex<T>) -> Complex<f64> {
    Complex::new(z.re.as_f64(), z.im.as_f64())
}
