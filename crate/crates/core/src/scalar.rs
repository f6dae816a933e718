//! Scalar abstraction shared by every numerical routine.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive};

/// Real scalar usable by the symbol, propagator and exponent routines.
///
/// Implemented for `f32`, `f64` and [`crate::Wide`], the 40-digit float used
/// when an oracle comparison would otherwise sit on the f64 round-off floor.
pub trait Real: Float + FloatConst + FromPrimitive + Debug + Display + Send + Sync + 'static {}

impl<T> Real for T where T: Float + FloatConst + FromPrimitive + Debug + Display + Send + Sync + 'static {}

/// Real scalar that can also drive the FFT-based solver.
pub trait FftReal: Real + rustfft::FftNum + realfft::FftNum {}

impl<T> FftReal for T where T: Real + rustfft::FftNum + realfft::FftNum {}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal must be representable")
}

/// Lossy conversion to `f64` for reporting and fitting.
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[inline]
pub(crate) fn cplx<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

#[inline]
pub(crate) fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

#[inline]
pub(crate) fn creal<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

#[inline]
pub(crate) fn imag_unit<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::one())
}

/// `x^p` for `x >= 0`, with `0^p = 0` for `p > 0` and `0^0 = 1`.
#[inline]
pub(crate) fn pow_nonneg<T: Real>(x: T, p: T) -> T {
    if x.is_zero() {
        if p.is_zero() {
            T::one()
        } else {
            T::zero()
        }
    } else {
        x.powf(p)
    }
}

/// Pairwise (tree) summation; the grouping depends only on the length.
pub fn pairwise_sum<T: Real>(xs: &[T]) -> T {
    match xs.len() {
        0 => T::zero(),
        1 => xs[0],
        n if n <= 8 => xs.iter().fold(T::zero(), |a, &b| a + b),
        n => {
            let (l, r) = xs.split_at(n / 2);
            pairwise_sum(l) + pairwise_sum(r)
        }
    }
}
