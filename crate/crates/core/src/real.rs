//! Real numbers that stay exact (rational) as long as every input was exact.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

#[derive(Clone, Debug)]
pub enum Real {
    Exact(BigRational),
    Float(f64),
}

impl Real {
    pub fn zero() -> Self {
        Real::Exact(BigRational::zero())
    }

    pub fn integer(n: impl Into<BigInt>) -> Self {
        Real::Exact(BigRational::from_integer(n.into()))
    }

    pub fn ratio(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Self {
        Real::Exact(BigRational::new(num.into(), den.into()))
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Real::Exact(_))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Real::Exact(r) => rational_to_f64(r),
            Real::Float(x) => *x,
        }
    }

    pub fn as_exact(&self) -> Option<&BigRational> {
        match self {
            Real::Exact(r) => Some(r),
            Real::Float(_) => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Real::Exact(r) => r.is_zero(),
            Real::Float(x) => *x == 0.0,
        }
    }

    pub fn is_positive(&self) -> bool {
        match self {
            Real::Exact(r) => r.is_positive(),
            Real::Float(x) => *x > 0.0,
        }
    }

    pub fn abs(&self) -> Real {
        match self {
            Real::Exact(r) => Real::Exact(r.abs()),
            Real::Float(x) => Real::Float(x.abs()),
        }
    }

    pub fn add(&self, other: &Real) -> Real {
        match (self, other) {
            (Real::Exact(a), Real::Exact(b)) => Real::Exact(a + b),
            _ => Real::Float(self.to_f64() + other.to_f64()),
        }
    }

    pub fn sub(&self, other: &Real) -> Real {
        match (self, other) {
            (Real::Exact(a), Real::Exact(b)) => Real::Exact(a - b),
            _ => Real::Float(self.to_f64() - other.to_f64()),
        }
    }

    pub fn mul(&self, other: &Real) -> Real {
        match (self, other) {
            (Real::Exact(a), Real::Exact(b)) => Real::Exact(a * b),
            _ => Real::Float(self.to_f64() * other.to_f64()),
        }
    }

    /// Division; `None` on an exact zero divisor.
    pub fn div(&self, other: &Real) -> Option<Real> {
        match (self, other) {
            (Real::Exact(a), Real::Exact(b)) => {
                if b.is_zero() {
                    None
                } else {
                    Some(Real::Exact(a / b))
                }
            }
            _ => {
                let d = other.to_f64();
                if d == 0.0 {
                    None
                } else {
                    Some(Real::Float(self.to_f64() / d))
                }
            }
        }
    }

    pub fn max(self, other: Real) -> Real {
        if other.partial_cmp(&self) == Some(Ordering::Greater) {
            other
        } else {
            self
        }
    }

    pub fn min(self, other: Real) -> Real {
        if other.partial_cmp(&self) == Some(Ordering::Less) {
            other
        } else {
            self
        }
    }
}

fn rational_to_f64(r: &BigRational) -> f64 {
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() {
            return n / d;
        }
    }
    // huge numerator/denominator: scale down by a common power of two
    let shift = r.numer().bits().max(r.denom().bits()).saturating_sub(1000);
    let n = (r.numer() >> shift).to_f64().unwrap_or(f64::NAN);
    let d = (r.denom() >> shift).to_f64().unwrap_or(f64::NAN);
    n / d
}

impl PartialEq for Real {
    fn eq(&self, other: &Self) -> bool {
        self.partial_cmp(other) == Some(Ordering::Equal)
    }
}

impl PartialOrd for Real {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Real::Exact(a), Real::Exact(b)) => Some(a.cmp(b)),
            _ => self.to_f64().partial_cmp(&other.to_f64()),
        }
    }
}

impl From<f64> for Real {
    fn from(x: f64) -> Self {
        Real::Float(x)
    }
}

impl From<BigInt> for Real {
    fn from(n: BigInt) -> Self {
        Real::integer(n)
    }
}

impl From<i64> for Real {
    fn from(n: i64) -> Self {
        Real::integer(n)
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Real::Exact(r) if r.is_integer() => write!(f, "{}", r.numer()),
            Real::Exact(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Real::Float(x) => write!(f, "{x:e}"),
        }
    }
}

/// Exact values serialize as `"p/q"` strings, floats as JSON numbers.
impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Real::Exact(_) => s.serialize_str(&self.to_string()),
            Real::Float(x) => s.serialize_f64(*x),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_arithmetic_stays_exact() {
        let a = Real::ratio(1, 2);
        let b = Real::integer(3);
        let c = a.mul(&b).add(&Real::ratio(1, 2));
        assert_eq!(c, Real::integer(2));
        assert!(c.is_exact());
        assert_eq!(c.to_string(), "2");
        assert_eq!(Real::ratio(6, 4).to_string(), "3/2");
    }

    #[test]
    fn mixing_with_float_degrades() {
        let c = Real::ratio(1, 4).add(&Real::Float(0.5));
        assert!(!c.is_exact());
        assert_eq!(c.to_f64(), 0.75);
    }

    #[test]
    fn division_by_zero_is_none() {
        assert!(Real::integer(1).div(&Real::zero()).is_none());
        assert!(Real::Float(1.0).div(&Real::Float(0.0)).is_none());
    }

    #[test]
    fn huge_rationals_convert() {
        let big = BigInt::from(3) << 3000usize;
        let r = Real::Exact(BigRational::new(big.clone(), big * 2));
        assert_eq!(r.to_f64(), 0.5);
    }
}
