use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::ratio::Rational;
use crate::error::Error;

/// An exact nonnegative binary rational `numerator / 2^exponent`.
///
/// Always stored in canonical form: the numerator is odd, or the value is
/// zero with exponent 0, or the exponent is 0.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dyadic {
    numerator: BigUint,
    exponent: u32,
}

impl Dyadic {
    pub fn new(numerator: BigUint, exponent: u32) -> Self {
        if numerator.is_zero() {
            return Self::zero();
        }
        let tz = numerator.trailing_zeros().unwrap_or(0);
        let shift = tz.min(u64::from(exponent)) as u32;
        Self {
            numerator: numerator >> shift,
            exponent: exponent - shift,
        }
    }

    pub fn from_parts(numerator: u64, exponent: u32) -> Self {
        Self::new(BigUint::from(numerator), exponent)
    }

    pub fn zero() -> Self {
        Self {
            numerator: BigUint::zero(),
            exponent: 0,
        }
    }

    pub fn one() -> Self {
        Self {
            numerator: BigUint::one(),
            exponent: 0,
        }
    }

    /// `2^-k`.
    pub fn pow2_neg(k: u32) -> Self {
        Self {
            numerator: BigUint::one(),
            exponent: k,
        }
    }

    pub fn numerator(&self) -> &BigUint {
        &self.numerator
    }

    pub fn exponent(&self) -> u32 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.numerator.is_zero()
    }

    /// Smallest `b` such that the value is an integer multiple of `2^-(b-1)`,
    /// clamped below at 1 (relevant only for 0 and 1).
    pub fn bit_length(&self) -> u32 {
        self.exponent + 1
    }

    /// True when the value is an integer multiple of `2^-k`.
    pub fn is_on_grid(&self, k: u32) -> bool {
        self.exponent <= k
    }

    /// Numerator over the common denominator `2^k`; requires `is_on_grid(k)`.
    pub fn scaled_numerator(&self, k: u32) -> BigUint {
        debug_assert!(self.is_on_grid(k));
        &self.numerator << (k - self.exponent)
    }

    pub fn checked_sub(&self, other: &Dyadic) -> Option<Dyadic> {
        let k = self.exponent.max(other.exponent);
        let a = self.scaled_numerator(k);
        let b = other.scaled_numerator(k);
        if a < b {
            None
        } else {
            Some(Dyadic::new(a - b, k))
        }
    }

    /// Multiplies by `2^-k`.
    pub fn shr(&self, k: u32) -> Dyadic {
        Dyadic::new(self.numerator.clone(), self.exponent + k)
    }

    pub fn to_rational(&self) -> Rational {
        Rational::new(
            BigInt::from(self.numerator.clone()),
            BigInt::from(BigUint::one() << self.exponent),
        )
    }

    /// Exact conversion; `None` when `r` is negative or its reduced
    /// denominator is not a power of two.
    pub fn from_rational(r: &Rational) -> Option<Dyadic> {
        let numer = r.numer().to_biguint()?;
        let denom = r.denom().to_biguint()?;
        let tz = denom.trailing_zeros().unwrap_or(0);
        if denom != BigUint::one() << tz {
            return None;
        }
        Some(Dyadic::new(numer, u32::try_from(tz).ok()?))
    }

    /// Smallest integer multiple of `2^-k` that is `≥ r`, for `r ≥ 0`.
    pub fn ceil_to_grid(r: &Rational, k: u32) -> Dyadic {
        let scaled = r.numer() * (BigInt::one() << k);
        let q = Integer::div_ceil(&scaled, r.denom());
        let q = q.to_biguint().expect("ceil_to_grid of a negative value");
        Dyadic::new(q, k)
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let k = self.exponent.max(other.exponent);
        self.scaled_numerator(k).cmp(&other.scaled_numerator(k))
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for &Dyadic {
    type Output = Dyadic;

    fn add(self, rhs: &Dyadic) -> Dyadic {
        let k = self.exponent.max(rhs.exponent);
        Dyadic::new(self.scaled_numerator(k) + rhs.scaled_numerator(k), k)
    }
}

impl Add for Dyadic {
    type Output = Dyadic;

    fn add(self, rhs: Dyadic) -> Dyadic {
        &self + &rhs
    }
}

impl Mul for &Dyadic {
    type Output = Dyadic;

    fn mul(self, rhs: &Dyadic) -> Dyadic {
        Dyadic::new(&self.numerator * &rhs.numerator, self.exponent + rhs.exponent)
    }
}

impl std::iter::Sum for Dyadic {
    fn sum<I: Iterator<Item = Dyadic>>(iter: I) -> Self {
        iter.fold(Dyadic::zero(), |acc, d| &acc + &d)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{}", self.numerator, self.exponent)
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Dyadic {
    type Err = Error;

    /// Accepts `n/2^k` with decimal `n` and `k`, or a bare decimal integer.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || Error::ParseDyadic(s.to_string());
        let digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
        match s.split_once('/') {
            None if digits(s) => Ok(Dyadic::new(s.parse().map_err(|_| bad())?, 0)),
            None => Err(bad()),
            Some((n, rest)) => {
                let k = rest.strip_prefix("2^").ok_or_else(bad)?;
                if !digits(n) || !digits(k) {
                    return Err(bad());
                }
                let numerator: BigUint = n.parse().map_err(|_| bad())?;
                let exponent: u32 = k.parse().map_err(|_| bad())?;
                Ok(Dyadic::new(numerator, exponent))
            }
        }
    }
}

impl Serialize for Dyadic {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Dyadic {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
