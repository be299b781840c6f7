//! Arithmetic backends for the three-term recurrence.
//!
//! The recurrence engine is generic over [`Scalar`]: plain `f64` for real
//! evaluation points, [`Complex64`] for shifted complex points, and
//! [`Compensated`] (complex double-double) for certification runs.

use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

pub trait Scalar:
    Copy
    + Debug
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn from_complex(z: Complex64) -> Self;
    fn from_real(x: f64) -> Self;
    fn to_complex(self) -> Complex64;
    /// Modulus, used by the overflow guard.
    fn magnitude(self) -> f64;
    fn zero() -> Self {
        Self::from_real(0.0)
    }
    fn one() -> Self {
        Self::from_real(1.0)
    }
}

impl Scalar for f64 {
    #[inline]
    fn from_complex(z: Complex64) -> Self {
        debug_assert_eq!(z.im, 0.0);
        z.re
    }
    #[inline]
    fn from_real(x: f64) -> Self {
        x
    }
    #[inline]
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
    #[inline]
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    #[inline]
    fn from_complex(z: Complex64) -> Self {
        z
    }
    #[inline]
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    #[inline]
    fn to_complex(self) -> Complex64 {
        self
    }
    #[inline]
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

/// Unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi)/2`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DoubleDouble {
    pub const fn new(x: f64) -> Self {
        DoubleDouble { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.hi + self.lo
    }
}

impl Add for DoubleDouble {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        let (s, e) = two_sum(self.hi, rhs.hi);
        let (t, f) = two_sum(self.lo, rhs.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        DoubleDouble { hi, lo }
    }
}

impl Neg for DoubleDouble {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        DoubleDouble {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        let (p, e) = two_prod(self.hi, rhs.hi);
        let e = e + (self.hi * rhs.lo + self.lo * rhs.hi);
        let (hi, lo) = quick_two_sum(p, e);
        DoubleDouble { hi, lo }
    }
}

/// Complex number with double-double components.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Compensated {
    pub re: DoubleDouble,
    pub im: DoubleDouble,
}

impl Add for Compensated {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Compensated {
            re: self.re + rhs.re,
            im: self.im + rhs.im,
        }
    }
}

impl Sub for Compensated {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Compensated {
            re: self.re - rhs.re,
            im: self.im - rhs.im,
        }
    }
}

impl Neg for Compensated {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Compensated {
            re: -self.re,
            im: -self.im,
        }
    }
}

impl Mul for Compensated {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        Compensated {
            re: self.re * rhs.re - self.im * rhs.im,
            im: self.re * rhs.im + self.im * rhs.re,
        }
    }
}

impl Scalar for Compensated {
    #[inline]
    fn from_complex(z: Complex64) -> Self {
        Compensated {
            re: DoubleDouble::new(z.re),
            im: DoubleDouble::new(z.im),
        }
    }
    #[inline]
    fn from_real(x: f64) -> Self {
        Self::from_complex(Complex64::new(x, 0.0))
    }
    #[inline]
    fn to_complex(self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
    #[inline]
    fn magnitude(self) -> f64 {
        self.to_complex().norm()
    }
}

/// Neumaier-compensated running sum of complex terms.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum {
    sum: Complex64,
    carry: Complex64,
}

#[inline]
fn neumaier_add(sum: &mut f64, carry: &mut f64, v: f64) {
    let t = *sum + v;
    if sum.abs() >= v.abs() {
        *carry += (*sum - t) + v;
    } else {
        *carry += (v - t) + *sum;
    }
    *sum = t;
}

impl NeumaierSum {
    pub fn add(&mut self, v: Complex64) {
        neumaier_add(&mut self.sum.re, &mut self.carry.re, v.re);
        neumaier_add(&mut self.sum.im, &mut self.carry.im, v.im);
    }

    pub fn total(&self) -> Complex64 {
        self.sum + self.carry
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn double_double_keeps_low_bits() {
        let a = DoubleDouble::new(1.0);
        let tiny = DoubleDouble::new(1e-20);
        let s = (a + tiny) - a;
        assert_eq!(s.value(), 1e-20);
        let third = DoubleDouble::new(1.0 / 3.0);
        let prod = third * DoubleDouble::new(3.0);
        // 3 * fl(1/3) is exactly representable as a double-double
        assert!((prod.hi - 1.0).abs() <= f64::EPSILON);
        assert!(prod.lo != 0.0 || prod.hi == 1.0);
    }

    #[test]
    fn neumaier_beats_naive_on_cancellation() {
        let mut s = NeumaierSum::default();
        for v in [1.0, 1e100, 1.0, -1e100] {
            s.add(Complex64::new(v, 0.0));
        }
        assert_eq!(s.total().re, 2.0);
    }

    #[test]
    fn compensated_complex_product() {
        let a = Compensated::from_complex(Complex64::new(0.5, 1.5));
        let b = Compensated::from_complex(Complex64::new(-2.0, 0.25));
        let p = (a * b).to_complex();
        let q = Complex64::new(0.5, 1.5) * Complex64::new(-2.0, 0.25);
        assert!((p - q).norm() < 1e-15);
    }
}
