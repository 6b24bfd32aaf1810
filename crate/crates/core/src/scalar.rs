//! Field-like scalars the operator ring is generic over.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// Relative tolerance for float comparisons.
pub const FLOAT_REL_TOL: f64 = 1e-12;
/// Absolute floor below which two floats are considered equal.
pub const FLOAT_ABS_FLOOR: f64 = 1e-300;

/// Minimal field contract: ring operations plus a partial reciprocal.
///
/// `recip` returns `None` when the element is not a unit of the scalar
/// substrate (zero, or a symbolic expression that is not a single term).
pub trait Scalar: Clone + fmt::Debug + PartialEq + Send + Sync {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(n: i64) -> Self;
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    fn recip(&self) -> Option<Self>;
    fn is_zero(&self) -> bool;

    /// Equality up to the substrate's tolerance; exact for exact substrates.
    fn approx_eq(&self, other: &Self) -> bool {
        self == other
    }

    /// `1/n` for a positive integer `n`.
    fn inv_int(n: u64) -> Self {
        Self::from_i64(n as i64)
            .recip()
            .expect("nonzero integer is invertible")
    }
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_i64(n: i64) -> Self {
        n as f64
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn neg(&self) -> Self {
        -self
    }
    fn recip(&self) -> Option<Self> {
        let r = 1.0 / self;
        (*self != 0.0 && r.is_finite()).then_some(r)
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn approx_eq(&self, other: &Self) -> bool {
        float_close(*self, *other, FLOAT_REL_TOL)
    }
}

/// `|a - b| <= max(rel * max(|a|, |b|), 1e-300)`.
pub fn float_close(a: f64, b: f64, rel: f64) -> bool {
    let scale = a.abs().max(b.abs());
    (a - b).abs() <= (rel * scale).max(FLOAT_ABS_FLOOR)
}

impl Scalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_i64(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn neg(&self) -> Self {
        -self
    }
    fn recip(&self) -> Option<Self> {
        (!Zero::is_zero(self)).then(|| num_traits::Inv::inv(self.clone()))
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
}

/// Formats a rational as `n` or `n/d`.
pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Rational from a pair of integers.
pub fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_reciprocal_of_zero_is_none() {
        assert!(Scalar::recip(&0.0f64).is_none());
        assert_eq!(Scalar::recip(&4.0f64), Some(0.25));
    }

    #[test]
    fn float_tolerance_is_relative_with_floor() {
        assert!(float_close(1.0e10, 1.0e10 + 1e-3, 1e-12));
        assert!(!float_close(1.0, 1.0 + 1e-9, 1e-12));
        assert!(float_close(0.0, 1e-301, 1e-12));
    }

    #[test]
    fn rational_inverse_integers() {
        assert_eq!(BigRational::inv_int(6), ratio(1, 6));
        assert_eq!(format_rational(&ratio(-3, 6)), "-1/2");
        assert_eq!(format_rational(&ratio(4, 2)), "2");
    }
}
