//! Double-double arithmetic (an unevaluated sum `hi + lo` of two f64 values),
//! giving roughly 106 bits of significand.
//!
//! Used where the f64 result is dominated by cancellation: the interpolation
//! system of the fundamental spline and near-zero kernel determinants.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

#[derive(Clone, Copy, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let err = b - (s - a);
    (s, err)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let err = a.mul_add(b, -p);
    (p, err)
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };
    pub const PI: Dd = Dd {
        hi: std::f64::consts::PI,
        lo: 1.224_646_799_147_353_2e-16,
    };
    pub const FRAC_PI_2: Dd = Dd {
        hi: std::f64::consts::FRAC_PI_2,
        lo: 6.123_233_995_736_766e-17,
    };
    pub const TAU: Dd = Dd {
        hi: std::f64::consts::TAU,
        lo: 2.449_293_598_294_706_4e-16,
    };

    #[inline]
    pub const fn new(hi: f64, lo: f64) -> Self {
        Dd { hi, lo }
    }

    #[inline]
    pub const fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn abs(self) -> Self {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    pub fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    #[inline]
    pub fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        let e = e + self.lo * b;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    #[inline]
    pub fn div_f64(self, b: f64) -> Self {
        self / Dd::from_f64(b)
    }

    pub fn powi(self, k: u32) -> Self {
        let mut base = self;
        let mut acc = Dd::ONE;
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                acc *= base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }

    /// Simultaneous sine and cosine, accurate to a few units of 2^-104 for
    /// arguments of moderate size.
    pub fn sin_cos(self) -> (Dd, Dd) {
        let k = (self.hi / std::f64::consts::FRAC_PI_2).round();
        let r = self - Dd::FRAC_PI_2.mul_f64(k);
        let r2 = r * r;

        let mut sin = r;
        let mut term = r;
        let mut i = 1.0_f64;
        loop {
            term = -(term * r2).div_f64((2.0 * i) * (2.0 * i + 1.0));
            sin += term;
            if term.hi.abs() < 1e-36 {
                break;
            }
            i += 1.0;
        }

        let mut cos = Dd::ONE;
        let mut term = Dd::ONE;
        let mut i = 1.0_f64;
        loop {
            term = -(term * r2).div_f64((2.0 * i - 1.0) * (2.0 * i));
            cos += term;
            if term.hi.abs() < 1e-36 {
                break;
            }
            i += 1.0;
        }

        match (k as i64).rem_euclid(4) {
            0 => (sin, cos),
            1 => (cos, -sin),
            2 => (-sin, -cos),
            _ => (-cos, sin),
        }
    }
}

impl From<f64> for Dd {
    fn from(x: f64) -> Self {
        Dd::from_f64(x)
    }
}

impl fmt::Debug for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dd({:e} + {:e})", self.hi, self.lo)
    }
}

impl fmt::Display for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e}", self.to_f64())
    }
}

impl PartialOrd for Dd {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            o => o,
        }
    }
}

impl Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let e = e + t;
        let (s, e) = quick_two_sum(s, e);
        let e = e + f;
        let (hi, lo) = quick_two_sum(s, e);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    #[inline]
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::from_f64(q3)
    }
}

impl AddAssign for Dd {
    fn add_assign(&mut self, rhs: Dd) {
        *self = *self + rhs;
    }
}

impl SubAssign for Dd {
    fn sub_assign(&mut self, rhs: Dd) {
        *self = *self - rhs;
    }
}

impl MulAssign for Dd {
    fn mul_assign(&mut self, rhs: Dd) {
        *self = *self * rhs;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Dd, b: Dd, tol: f64) -> bool {
        (a - b).abs().to_f64() <= tol
    }

    #[test]
    fn arithmetic_keeps_low_word() {
        let third = Dd::ONE.div_f64(3.0);
        let back = third.mul_f64(3.0);
        assert!(close(back, Dd::ONE, 1e-31));
        let tiny = Dd::from_f64(1.0) + Dd::from_f64(1e-20);
        assert_eq!((tiny - Dd::ONE).to_f64(), 1e-20);
    }

    #[test]
    fn pi_constants_are_consistent() {
        assert!(close(Dd::FRAC_PI_2.mul_f64(2.0), Dd::PI, 1e-32));
        assert!(close(Dd::PI.mul_f64(2.0), Dd::TAU, 1e-32));
    }

    #[test]
    fn sin_cos_special_angles() {
        let (s, c) = Dd::PI.div_f64(6.0).sin_cos();
        assert!(close(s, Dd::from_f64(0.5), 1e-31));
        let (s, c2) = Dd::PI.div_f64(4.0).sin_cos();
        assert!(close(s * s, Dd::from_f64(0.5), 1e-31));
        assert!(close(c2 * c2, Dd::from_f64(0.5), 1e-31));
        assert!(close(c * c, Dd::from_f64(0.75), 1e-31));
        let (s, c) = Dd::PI.sin_cos();
        assert!(s.abs().to_f64() < 1e-31);
        assert!(close(c, -Dd::ONE, 1e-31));
    }

    #[test]
    fn sin_cos_matches_f64_and_pythagoras() {
        for i in -50..50 {
            let x = Dd::from_f64(i as f64 * 0.37 + 0.011);
            let (s, c) = x.sin_cos();
            assert!((s.to_f64() - x.hi.sin()).abs() < 1e-15);
            assert!((c.to_f64() - x.hi.cos()).abs() < 1e-15);
            assert!(close(s * s + c * c, Dd::ONE, 1e-30));
        }
    }

    #[test]
    fn powi_matches_repeated_product() {
        let q = Dd::from_f64(0.21);
        let mut p = Dd::ONE;
        for _ in 0..17 {
            p *= q;
        }
        assert!(close(q.powi(17), p, 1e-40));
    }
}
