//! Exact dyadic numbers and rational parsing.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// `numerator / 2^exponent`, kept in canonical form (odd numerator or exponent 0).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DyadicValue {
    numerator: BigInt,
    exponent: u32,
}

impl DyadicValue {
    pub fn new(numerator: impl Into<BigInt>, exponent: u32) -> Self {
        let mut numerator = numerator.into();
        let mut exponent = exponent;
        if numerator.is_zero() {
            return Self { numerator, exponent: 0 };
        }
        while exponent > 0 && numerator.is_even() {
            numerator >>= 1u32;
            exponent -= 1;
        }
        Self { numerator, exponent }
    }

    pub fn zero() -> Self {
        Self::new(0, 0)
    }

    pub fn numerator(&self) -> &BigInt {
        &self.numerator
    }

    pub fn exponent(&self) -> u32 {
        self.exponent
    }

    /// The numerator of this value written over `2^exponent`, for `exponent >= self.exponent()`.
    pub fn scaled_to(&self, exponent: u32) -> Option<BigInt> {
        (exponent >= self.exponent).then(|| &self.numerator << (exponent - self.exponent))
    }

    pub fn to_rational(&self) -> BigRational {
        BigRational::new(self.numerator.clone(), BigInt::one() << self.exponent)
    }

    pub fn to_f64(&self) -> f64 {
        self.to_rational().to_f64().unwrap_or(f64::NAN)
    }

    /// Rounds a rational to the nearest multiple of `2^-exponent` (ties away from zero).
    pub fn round_rational(x: &BigRational, exponent: u32) -> Self {
        let scaled = x * BigRational::from_integer(BigInt::one() << exponent);
        Self::new(scaled.round().to_integer(), exponent)
    }

    pub fn is_negative(&self) -> bool {
        self.numerator.is_negative()
    }
}

impl PartialOrd for DyadicValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for DyadicValue {
    fn cmp(&self, other: &Self) -> Ordering {
        let e = self.exponent.max(other.exponent);
        let a = &self.numerator << (e - self.exponent);
        let b = &other.numerator << (e - other.exponent);
        a.cmp(&b)
    }
}

impl fmt::Display for DyadicValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exponent == 0 {
            write!(f, "{}", self.numerator)
        } else {
            write!(f, "{}/2^{}", self.numerator, self.exponent)
        }
    }
}

impl FromStr for DyadicValue {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let r = parse_rational(s)?;
        let den = r.denom();
        let bits = den.trailing_zeros().unwrap_or(0);
        if (den >> bits) != BigInt::one() {
            return Err(Error::Parse(format!("`{s}` is not a dyadic rational")));
        }
        Ok(Self::new(r.numer().clone(), bits as u32))
    }
}

/// Parses `num/den`, `k/2^n`, or a plain integer into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("malformed rational `{s}`"));
    let parse_int = |t: &str| BigInt::from_str(t.trim()).map_err(|_| bad());
    match s.split_once('/') {
        None => Ok(BigRational::from_integer(parse_int(s)?)),
        Some((num, den)) => {
            let num = parse_int(num)?;
            let den = match den.trim().split_once('^') {
                Some((base, exp)) => {
                    let base = parse_int(base)?;
                    let exp: u32 = exp.trim().parse().map_err(|_| bad())?;
                    num_traits::pow(base, exp as usize)
                }
                None => parse_int(den)?,
            };
            if den.is_zero() {
                return Err(Error::Parse(format!("zero denominator in `{s}`")));
            }
            Ok(BigRational::new(num, den))
        }
    }
}

/// `num/den` with the denominator omitted when it is 1.
pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub(crate) fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub(crate) fn pow2(e: u32) -> BigInt {
    BigInt::one() << e
}

/// `floor(x * 2^e)` and `ceil(x * 2^e)` as integers.
pub(crate) fn scaled_floor_ceil(x: &BigRational, e: u32) -> (BigInt, BigInt) {
    let scaled = x * BigRational::from_integer(pow2(e));
    (scaled.floor().to_integer(), scaled.ceil().to_integer())
}
