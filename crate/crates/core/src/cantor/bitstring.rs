use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// A finite word over `{0,1}`.
///
/// The derived ordering is lexicographic with a proper prefix sorting before
/// its extensions. Restricted to an antichain this is the left-to-right order
/// of the corresponding cylinders in Cantor space, which the clopen kernel
/// relies on.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    bits: Vec<bool>,
}

impl BitString {
    /// The empty string ε.
    pub fn empty() -> Self {
        Self { bits: Vec::new() }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// The string of length `len` spelling the low bits of `value`, most
    /// significant first.
    pub fn from_index(value: u64, len: usize) -> Self {
        let bits = (0..len)
            .rev()
            .map(|i| i < 64 && (value >> i) & 1 == 1)
            .collect();
        Self { bits }
    }

    /// All strings of length exactly `len`, left to right.
    pub fn all_of_length(len: usize) -> impl Iterator<Item = BitString> {
        assert!(len < 64, "enumeration length {len} too large");
        (0..1u64 << len).map(move |i| BitString::from_index(i, len))
    }

    /// All strings of length at most `len`, in length-then-lexicographic order.
    pub fn all_up_to_length(len: usize) -> impl Iterator<Item = BitString> {
        (0..=len).flat_map(BitString::all_of_length)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bit(&self, i: usize) -> Option<bool> {
        self.bits.get(i).copied()
    }

    pub fn child(&self, bit: bool) -> BitString {
        let mut bits = Vec::with_capacity(self.bits.len() + 1);
        bits.extend_from_slice(&self.bits);
        bits.push(bit);
        Self { bits }
    }

    /// `None` for ε.
    pub fn parent(&self) -> Option<BitString> {
        if self.bits.is_empty() {
            None
        } else {
            Some(Self {
                bits: self.bits[..self.bits.len() - 1].to_vec(),
            })
        }
    }

    /// The string differing from `self` only in the last bit; `None` for ε.
    pub fn sibling(&self) -> Option<BitString> {
        let last = *self.bits.last()?;
        let mut bits = self.bits.clone();
        *bits.last_mut().unwrap() = !last;
        Some(Self { bits })
    }

    pub fn last_bit(&self) -> Option<bool> {
        self.bits.last().copied()
    }

    pub fn is_prefix_of(&self, other: &BitString) -> bool {
        other.bits.starts_with(&self.bits)
    }

    pub fn is_proper_prefix_of(&self, other: &BitString) -> bool {
        self.len() < other.len() && self.is_prefix_of(other)
    }

    /// True when one of the two strings is a prefix of the other.
    pub fn is_comparable(&self, other: &BitString) -> bool {
        self.is_prefix_of(other) || other.is_prefix_of(self)
    }

    /// The first `n` bits (the whole string when `n ≥ len`).
    pub fn prefix(&self, n: usize) -> BitString {
        Self {
            bits: self.bits[..n.min(self.bits.len())].to_vec(),
        }
    }

    /// Prefixes of `self` from ε up to and including `self`.
    pub fn prefixes(&self) -> impl Iterator<Item = BitString> + '_ {
        (0..=self.bits.len()).map(move |n| self.prefix(n))
    }

    pub fn concat(&self, tail: &BitString) -> BitString {
        let mut bits = Vec::with_capacity(self.len() + tail.len());
        bits.extend_from_slice(&self.bits);
        bits.extend_from_slice(&tail.bits);
        Self { bits }
    }

    /// Length-then-lexicographic comparison (shortlex).
    pub fn shortlex_cmp(&self, other: &BitString) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.bits.cmp(&other.bits))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{self}\"")
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::ParseBitString(s.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { bits })
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
