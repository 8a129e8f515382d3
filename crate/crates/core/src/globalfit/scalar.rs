use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Field arithmetic used by the simplex tableau.
///
/// `is_positive`/`is_negative` compare against the type's own zero
/// threshold: a small epsilon for floats, exact sign for rationals.
pub trait Scalar:
    Clone
    + Debug
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn is_positive(&self) -> bool;
    fn is_negative(&self) -> bool;
    fn to_f64(&self) -> f64;

    fn is_zero(&self) -> bool {
        !self.is_positive() && !self.is_negative()
    }
}

/// Pivot threshold for floating-point tableaus.
pub const FLOAT_PIVOT_EPS: f64 = 1e-11;

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn is_positive(&self) -> bool {
        *self > FLOAT_PIVOT_EPS
    }
    fn is_negative(&self) -> bool {
        *self < -FLOAT_PIVOT_EPS
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_positive(&self) -> bool {
        Signed::is_positive(self)
    }
    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// The rational with the smallest denominator inside `[x − tol, x + tol]`.
///
/// Recovers exact values such as `1/3` from their floating-point images.
pub fn rationalize(x: f64, tol: f64) -> BigRational {
    assert!(x.is_finite(), "cannot rationalize {x}");
    if x < 0.0 {
        return -rationalize(-x, tol);
    }
    let lo = (x - tol).max(0.0);
    let hi = x + tol;
    let (p, q) = simplest_between(lo, hi, 0);
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

fn simplest_between(lo: f64, hi: f64, depth: usize) -> (i128, i128) {
    let a = lo.floor();
    if a == lo {
        return (a as i128, 1);
    }
    if a + 1.0 <= hi || depth > 60 {
        return (a as i128 + 1, 1);
    }
    let (p, q) = simplest_between(1.0 / (hi - a), 1.0 / (lo - a), depth + 1);
    (a as i128 * p + q, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: i64, q: i64) -> BigRational {
        BigRational::new(p.into(), q.into())
    }

    #[test]
    fn recovers_simple_fractions() {
        assert_eq!(rationalize(1.0 / 3.0, 1e-9), r(1, 3));
        assert_eq!(rationalize(0.4, 1e-9), r(2, 5));
        assert_eq!(rationalize((1.0 - 1.0 / 3.0) / 2.0, 1e-9), r(1, 3));
        assert_eq!(rationalize(0.0, 1e-9), r(0, 1));
        assert_eq!(rationalize(1.0, 1e-9), r(1, 1));
        assert_eq!(rationalize(-0.25, 1e-9), r(-1, 4));
        assert_eq!(rationalize(1e-12, 1e-9), r(0, 1));
    }

    #[test]
    fn stays_within_tolerance() {
        for &x in &[0.1464466094067262, 0.8535533905932737, 0.123456789, 0.999999] {
            let q = rationalize(x, 1e-9);
            assert!((Scalar::to_f64(&q) - x).abs() <= 1e-9, "{x} -> {q}");
        }
    }
}
