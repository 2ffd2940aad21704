//! Counter-based random bits: every draw is a pure function of its key.
//!
//! Trials never share generator state, so results do not depend on the order
//! or the thread on which they are computed.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Key space tags keep independent uses of the same seed apart.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    LevelSign = 1,
    CellSign = 2,
    Walk = 3,
    Sample = 4,
}

const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// 64 pseudo-random bits for `(seed, stream, a, b)`.
///
/// Each key component is spread by an odd multiplier before the finalizer, so
/// consecutive seeds and indices land far apart.
#[inline]
pub fn bits(seed: u64, stream: Stream, a: u64, b: u64) -> u64 {
    let salt = (stream as u64).wrapping_mul(0xd1b5_4a32_d192_ed03);
    let h = mix64(seed.wrapping_add(salt).wrapping_mul(GAMMA).wrapping_add(GAMMA));
    let h = mix64(h.wrapping_add(a.wrapping_add(1).wrapping_mul(0xbf58_476d_1ce4_e5b9)).wrapping_mul(GAMMA));
    mix64(h.wrapping_add(b.wrapping_add(1).wrapping_mul(0x94d0_49bb_1331_11eb)).wrapping_mul(GAMMA))
}

/// Uniform in [0, 1) with 53 bits of resolution.
#[inline]
pub fn uniform(seed: u64, stream: Stream, a: u64, b: u64) -> f64 {
    (bits(seed, stream, a, b) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// A success probability held exactly, with the 64-bit acceptance threshold
/// `floor(p * 2^64)` precomputed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Probability {
    num: u64,
    den: u64,
    threshold: u128,
}

impl Probability {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 || num > den {
            return Err(Error::Domain(format!("probability {num}/{den} not in [0,1]")));
        }
        let g = num_integer::gcd(num, den);
        let (num, den) = (num / g, den / g);
        let threshold = ((num as u128) << 64) / den as u128;
        Ok(Self { num, den, threshold })
    }

    pub fn half() -> Self {
        Self::new(1, 2).unwrap()
    }

    pub fn from_rational(r: &BigRational) -> Result<Self> {
        if r.is_negative() || r > &BigRational::one() {
            return Err(Error::Domain(format!("probability {r} not in [0,1]")));
        }
        let num = r.numer().to_u64();
        let den = r.denom().to_u64();
        match (num, den) {
            (Some(n), Some(d)) => Self::new(n, d),
            _ => Err(Error::Domain(format!("probability {r} has oversized terms"))),
        }
    }

    /// Nearest fraction with denominator 10^6 (for float-valued settings only).
    pub fn from_f64(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("probability {p} not in [0,1]")));
        }
        Self::new((p * 1e6).round() as u64, 1_000_000)
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn to_rational(&self) -> BigRational {
        BigRational::new(BigInt::from(self.num), BigInt::from(self.den))
    }

    pub fn complement(&self) -> Self {
        Self::new(self.den - self.num, self.den).unwrap()
    }

    /// True with probability `p` when `bits` is uniform.
    #[inline]
    pub fn accepts(&self, bits: u64) -> bool {
        (bits as u128) < self.threshold
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }
}

impl std::fmt::Display for Probability {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl From<Probability> for String {
    fn from(p: Probability) -> String {
        p.to_string()
    }
}

impl TryFrom<String> for Probability {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        Self::from_rational(&crate::dyadic::parse_rational(&s)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_keyed() {
        assert_eq!(bits(7, Stream::CellSign, 3, 4), bits(7, Stream::CellSign, 3, 4));
        assert_ne!(bits(7, Stream::CellSign, 3, 4), bits(7, Stream::CellSign, 4, 3));
        assert_ne!(bits(7, Stream::CellSign, 3, 4), bits(7, Stream::LevelSign, 3, 4));
        assert_ne!(bits(7, Stream::CellSign, 3, 4), bits(8, Stream::CellSign, 3, 4));
    }

    #[test]
    fn threshold_is_exact() {
        let half = Probability::half();
        assert!(half.accepts((1u64 << 63) - 1));
        assert!(!half.accepts(1u64 << 63));
        let one = Probability::new(1, 1).unwrap();
        assert!(one.accepts(u64::MAX));
        assert!(!Probability::new(0, 3).unwrap().accepts(0));
        assert!(Probability::new(4, 3).is_err());
    }

    #[test]
    fn empirical_rate() {
        let p = Probability::new(3, 4).unwrap();
        let hits = (0..200_000u64)
            .filter(|&i| p.accepts(bits(11, Stream::Sample, i, 0)))
            .count();
        let rate = hits as f64 / 200_000.0;
        // sd = sqrt(3/16 / 2e5) ~ 9.7e-4
        assert!((rate - 0.75).abs() < 5e-3, "{rate}");
    }
}
