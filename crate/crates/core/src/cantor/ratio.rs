//! Exact rationals for quantities that leave the dyadic grid (mixture
//! weights `1/(i²+i)` are not binary rationals).

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::Error;

pub type Rational = num_rational::BigRational;

pub fn rational(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

/// `2^e` for any integer `e`.
pub fn pow2(e: i64) -> Rational {
    let magnitude = BigInt::one() << e.unsigned_abs();
    if e >= 0 {
        Rational::from_integer(magnitude)
    } else {
        Rational::new(BigInt::one(), magnitude)
    }
}

fn bits(n: &BigInt) -> i64 {
    n.bits() as i64
}

/// `⌈log₂ v⌉` for `v > 0`, exactly.
pub fn ceil_log2(v: &Rational) -> i64 {
    assert!(v.is_positive(), "ceil_log2 of a non-positive value");
    // v lies in (2^(e-1), 2^(e+1)) for e = bits(p) - bits(q).
    let e = bits(v.numer()) - bits(v.denom());
    if *v <= pow2(e) {
        e
    } else {
        e + 1
    }
}

/// `⌊log₂ v⌋` for `v > 0`, exactly.
pub fn floor_log2(v: &Rational) -> i64 {
    assert!(v.is_positive(), "floor_log2 of a non-positive value");
    let e = bits(v.numer()) - bits(v.denom());
    if *v >= pow2(e) {
        e
    } else {
        e - 1
    }
}

/// `‖v‖ = ⌈log₂ v⌉ − 1`.
pub fn norm_exponent(v: &Rational) -> Result<i64, Error> {
    match v.cmp(&Rational::zero()) {
        Ordering::Greater => Ok(ceil_log2(v) - 1),
        _ => Err(Error::NormAtZero),
    }
}

/// Text form: `n/2^k` when the reduced denominator is a power of two,
/// `p/q` otherwise.
pub fn format_rational(v: &Rational) -> String {
    match super::Dyadic::from_rational(v) {
        Some(d) => d.to_string(),
        None => format!("{}/{}", v.numer(), v.denom()),
    }
}

/// Parses either text form of [`format_rational`]; negative values are rejected.
pub fn parse_rational(s: &str) -> Result<Rational, Error> {
    if let Ok(d) = s.parse::<super::Dyadic>() {
        return Ok(d.to_rational());
    }
    let bad = || Error::ParseRational(s.to_string());
    let (p, q) = s.split_once('/').ok_or_else(bad)?;
    let digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
    if !digits(p) || !digits(q) {
        return Err(bad());
    }
    let p: BigInt = p.parse().map_err(|_| bad())?;
    let q: BigInt = q.parse().map_err(|_| bad())?;
    if q.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(p, q))
}
