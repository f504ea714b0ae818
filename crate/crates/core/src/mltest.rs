//! The Martin-Löf test induced by a distribution `m` through concatenation:
//! `T(β) = Σ_{x ⪯ β} m(x)·2^|x|`, its integral measure τ, the deficiency
//! `d = ‖T‖`, and its clopen fail regions.

use std::fmt;

use num_traits::{One, Zero};

use crate::cantor::ratio::{format_rational, norm_exponent, pow2};
use crate::cantor::{BitString, ClopenSet, Rational};
use crate::error::{Error, Result};
use crate::semimeasure::{total_mass, StagedDistribution};

/// A test derived from its generating distribution; holds no other state.
#[derive(Clone, Copy, Debug)]
pub struct ConcatTest<'a> {
    m: &'a StagedDistribution,
}

impl<'a> ConcatTest<'a> {
    pub fn new(m: &'a StagedDistribution) -> Self {
        Self { m }
    }

    pub fn generator(&self) -> &'a StagedDistribution {
        self.m
    }

    /// `m(x, s)·2^|x|`, the contribution of `x` to `T` on `xΩ`.
    fn density(&self, x: &BitString, s: usize) -> Rational {
        self.m.value(x, s) * pow2(x.len() as i64)
    }
}

/// `xα`.
pub fn concat(x: &BitString, alpha_prefix: &BitString) -> BitString {
    x.concat(alpha_prefix)
}

/// Infimum of `T` over `βΩ`: the sum over supported prefixes of `β`.
pub fn test_value(test: &ConcatTest<'_>, beta_prefix: &BitString, s: usize) -> Rational {
    beta_prefix
        .prefixes()
        .filter(|x| test.m.contains(x))
        .map(|x| test.density(&x, s))
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Deficiency {
    MinusInfinite,
    Finite(i64),
}

impl fmt::Display for Deficiency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Deficiency::Finite(d) => write!(f, "{d}"),
            Deficiency::MinusInfinite => f.write_str("-inf"),
        }
    }
}

/// `‖T(β)‖` on the cylinder of `beta_prefix`.
pub fn deficiency(test: &ConcatTest<'_>, beta_prefix: &BitString, s: usize) -> Deficiency {
    match norm_exponent(&test_value(test, beta_prefix, s)) {
        Ok(d) => Deficiency::Finite(d),
        Err(_) => Deficiency::MinusInfinite,
    }
}

/// `τ(a) = ∫_a T dλ = Σₓ m(x)·2^|x|·λ(a ∩ xΩ)`.
pub fn tau_clopen(test: &ConcatTest<'_>, a: &ClopenSet, s: usize) -> Rational {
    test.m
        .support()
        .map(|x| {
            let within = a.measure_within(x);
            if within.is_zero() {
                Rational::zero()
            } else {
                test.density(x, s) * within.to_rational()
            }
        })
        .sum()
}

/// `λ(T) = Σₓ m(x, s)`, which must not exceed 1.
pub fn expectation(test: &ConcatTest<'_>, s: usize) -> Result<Rational> {
    let mass = total_mass(test.m, s);
    if mass > Rational::one() {
        return Err(Error::NotATest {
            stage: s,
            mass: format_rational(&mass),
        });
    }
    Ok(mass)
}

/// Canonical union of the cylinders `y` with `|y| ≤ depth` and
/// `test_value(y) > c`.
///
/// `T` is constant on cylinders below the longest supported string, so the
/// result is exact for the frozen stage; `depth` must reach that length.
pub fn fail_region(test: &ConcatTest<'_>, c: &Rational, s: usize, depth: usize) -> Result<ClopenSet> {
    let required = test.m.max_len();
    if depth < required {
        return Err(Error::DepthTooShallow { depth, required });
    }

    let mut out = Vec::new();
    let root = BitString::empty();
    let mut stack = vec![(test.density(&root, s), root)];
    while let Some((value, y)) = stack.pop() {
        if value > *c {
            out.push(y);
            continue;
        }
        if y.len() >= depth || test.m.strict_extensions(&y).next().is_none() {
            continue;
        }
        for b in [true, false] {
            let child = y.child(b);
            let v = if test.m.contains(&child) {
                &value + test.density(&child, s)
            } else {
                value.clone()
            };
            stack.push((v, child));
        }
    }
    Ok(ClopenSet::from_cylinders(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cantor::ratio::rational;
    use crate::semimeasure::{Staged, StagedKind};

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn dist(points: &[(&str, (i64, i64))]) -> StagedDistribution {
        let mut st = Staged::new(0);
        for (x, (n, d)) in points {
            st.set(bs(x), 0, rational(*n, *d));
        }
        StagedDistribution::from_staged(st)
    }

    fn set(xs: &[&str]) -> ClopenSet {
        xs.iter().map(|s| bs(s)).collect()
    }

    #[test]
    fn concat_examples() {
        assert_eq!(concat(&bs("01"), &bs("10")), bs("0110"));
        assert_eq!(concat(&bs(""), &bs("101")), bs("101"));
        assert_eq!(concat(&bs("101"), &bs("")), bs("101"));
    }

    #[test]
    fn test_value_examples() {
        let m = dist(&[("0", (1, 8)), ("00", (1, 16))]);
        let t = ConcatTest::new(&m);
        assert_eq!(test_value(&t, &bs("00"), 0), rational(1, 2));
        assert_eq!(test_value(&t, &bs(""), 0), Rational::zero());
        assert_eq!(test_value(&t, &bs("11"), 0), Rational::zero());
    }

    #[test]
    fn deficiency_examples() {
        let m = dist(&[("0", (1, 8)), ("00", (1, 16)), ("1", (1, 2))]);
        let t = ConcatTest::new(&m);
        assert_eq!(deficiency(&t, &bs("00"), 0), Deficiency::Finite(-2));
        assert_eq!(deficiency(&t, &bs(""), 0), Deficiency::MinusInfinite);
        // T("1") = 1/2 · 2 = 1; scale by a deeper point to reach 4.
        let m4 = dist(&[("11", (1, 1))]);
        assert_eq!(deficiency(&ConcatTest::new(&m4), &bs("11"), 0), Deficiency::Finite(1));
        assert_eq!(deficiency(&t, &bs("1"), 0), Deficiency::Finite(-1));
    }

    #[test]
    fn tau_examples() {
        let m = dist(&[("0", (1, 8)), ("1", (1, 8)), ("00", (1, 16))]);
        let t = ConcatTest::new(&m);
        assert_eq!(tau_clopen(&t, &ClopenSet::omega(), 0), rational(5, 16));
        assert_eq!(tau_clopen(&t, &ClopenSet::empty(), 0), Rational::zero());
        let single = dist(&[("0", (1, 8))]);
        assert_eq!(tau_clopen(&ConcatTest::new(&single), &set(&["0"]), 0), rational(1, 8));
    }

    #[test]
    fn expectation_examples() {
        let m = dist(&[("0", (1, 8)), ("1", (1, 8)), ("00", (1, 16))]);
        let t = ConcatTest::new(&m);
        assert_eq!(expectation(&t, 0).unwrap(), rational(5, 16));
        assert_eq!(expectation(&t, 0).unwrap(), tau_clopen(&t, &ClopenSet::omega(), 0));
        let empty = StagedDistribution::default();
        assert_eq!(expectation(&ConcatTest::new(&empty), 0).unwrap(), Rational::zero());
        let heavy = dist(&[("0", (3, 4)), ("1", (1, 2))]);
        assert!(matches!(expectation(&ConcatTest::new(&heavy), 0), Err(Error::NotATest { .. })));
    }

    #[test]
    fn fail_region_examples() {
        let single = dist(&[("0", (1, 8))]);
        let t = ConcatTest::new(&single);
        assert_eq!(fail_region(&t, &rational(1, 8), 0, 1).unwrap(), set(&["0"]));
        assert!(fail_region(&t, &rational(1, 4), 0, 3).unwrap().is_empty());

        let m = dist(&[("", (1, 16)), ("01", (1, 8)), ("1", (1, 8))]);
        let t = ConcatTest::new(&m);
        // c = 0: every point with a positively weighted prefix.
        assert_eq!(fail_region(&t, &Rational::zero(), 0, 2).unwrap(), ClopenSet::omega());
        let m2 = dist(&[("01", (1, 8)), ("1", (1, 8))]);
        assert_eq!(
            fail_region(&ConcatTest::new(&m2), &Rational::zero(), 0, 2).unwrap(),
            set(&["01", "1"])
        );
        assert!(matches!(
            fail_region(&t, &Rational::zero(), 0, 1),
            Err(Error::DepthTooShallow { depth: 1, required: 2 })
        ));
    }

    #[test]
    fn fail_region_matches_enumeration() {
        let m = dist(&[("", (1, 32)), ("0", (1, 16)), ("01", (1, 16)), ("011", (1, 32)), ("10", (1, 8))]);
        let t = ConcatTest::new(&m);
        for depth in 3..=6 {
            for c in [(0, 1), (1, 32), (1, 8), (1, 4), (1, 2), (1, 1), (2, 1)] {
                let c = rational(c.0, c.1);
                let brute: ClopenSet = BitString::all_up_to_length(depth)
                    .filter(|y| test_value(&t, y, 0) > c)
                    .collect();
                assert_eq!(fail_region(&t, &c, 0, depth).unwrap(), brute);
            }
        }
    }
}
