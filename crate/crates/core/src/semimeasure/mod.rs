//! Stage-indexed distributions on finite strings and semimeasures on Cantor
//! space, the dominant mixture, complexity, and the monotone round-up that
//! gives the dominant semimeasure short binary values.

mod roundup;
mod staged;

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Signed, Zero};

use crate::cantor::ratio::{ceil_log2, norm_exponent, pow2, rational};
use crate::cantor::{BitString, Dyadic, Rational};
use crate::error::{Error, Result};

pub use roundup::{round_up_grid, round_up_monotone, Snapshot};
pub use staged::Staged;

/// A distribution `m` on finite strings, replayed over stages.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StagedDistribution(Staged);

/// A semimeasure on Ω replayed over stages; the support is prefix-closed.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StagedSemimeasure(Staged);

/// Shared view of the two staged kinds.
pub trait StagedKind: Sized {
    const KIND: &'static str;
    fn from_staged(staged: Staged) -> Self;
    fn staged(&self) -> &Staged;
    fn validate(&self) -> Result<(), Violation>;
}

impl StagedKind for StagedDistribution {
    const KIND: &'static str = "distribution";

    fn from_staged(staged: Staged) -> Self {
        Self(staged)
    }

    fn staged(&self) -> &Staged {
        &self.0
    }

    fn validate(&self) -> Result<(), Violation> {
        validate_distribution(self)
    }
}

impl StagedKind for StagedSemimeasure {
    const KIND: &'static str = "semimeasure";

    fn from_staged(mut staged: Staged) -> Self {
        staged.prefix_close();
        Self(staged)
    }

    fn staged(&self) -> &Staged {
        &self.0
    }

    fn validate(&self) -> Result<(), Violation> {
        validate_semimeasure(self)
    }
}

impl std::ops::Deref for StagedDistribution {
    type Target = Staged;

    fn deref(&self) -> &Staged {
        &self.0
    }
}

impl std::ops::Deref for StagedSemimeasure {
    type Target = Staged;

    fn deref(&self) -> &Staged {
        &self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    Negative,
    Monotonicity,
    Superadditivity,
    RootAboveOne,
    MassAboveOne,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::Negative => "negative value",
            ViolationKind::Monotonicity => "monotonicity",
            ViolationKind::Superadditivity => "superadditivity",
            ViolationKind::RootAboveOne => "value at root exceeds 1",
            ViolationKind::MassAboveOne => "total mass exceeds 1",
        })
    }
}

/// First invariant failure found by a validator; `x` is `None` for
/// whole-stage violations such as total mass.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub stage: usize,
    pub x: Option<BitString>,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.x {
            Some(x) => write!(f, "stage {}, x \"{}\": {}", self.stage, x, self.kind),
            None => write!(f, "stage {}: {}", self.stage, self.kind),
        }
    }
}

fn check_pointwise(staged: &Staged, order: &[BitString], s: usize, prev: Option<usize>) -> Result<(), Violation> {
    for x in order {
        let v = staged.value(x, s);
        let fail = |kind| Violation {
            stage: s,
            x: Some(x.clone()),
            kind,
        };
        if v.is_negative() {
            return Err(fail(ViolationKind::Negative));
        }
        if let Some(p) = prev {
            if v < staged.value(x, p) {
                return Err(fail(ViolationKind::Monotonicity));
            }
        }
    }
    Ok(())
}

/// Superadditivity `P(x) ≥ P(x0) + P(x1)`, `P(ε) ≤ 1`, and stage
/// monotonicity, at every stage.
pub fn validate_semimeasure(p: &StagedSemimeasure) -> Result<(), Violation> {
    let order = p.support_shortlex();
    let mut prev = None;
    for s in p.change_points() {
        check_pointwise(p, &order, s, prev)?;
        let at = |x: &BitString| p.value(x, s);
        if at(&BitString::empty()) > Rational::one() {
            return Err(Violation {
                stage: s,
                x: Some(BitString::empty()),
                kind: ViolationKind::RootAboveOne,
            });
        }
        for x in &order {
            if at(x) < at(&x.child(false)) + at(&x.child(true)) {
                return Err(Violation {
                    stage: s,
                    x: Some(x.clone()),
                    kind: ViolationKind::Superadditivity,
                });
            }
        }
        prev = Some(s);
    }
    Ok(())
}

/// Total mass at most 1 and stage monotonicity, at every stage.
pub fn validate_distribution(m: &StagedDistribution) -> Result<(), Violation> {
    let order = m.support_shortlex();
    let mut prev = None;
    for s in m.change_points() {
        check_pointwise(m, &order, s, prev)?;
        if total_mass(m, s) > Rational::one() {
            return Err(Violation {
                stage: s,
                x: None,
                kind: ViolationKind::MassAboveOne,
            });
        }
        prev = Some(s);
    }
    Ok(())
}

/// `Σₓ m(x, s)`.
pub fn total_mass(m: &Staged, s: usize) -> Rational {
    m.support().map(|x| m.value(x, s)).sum()
}

/// Mixture weight `1/(i² + i)` for the 1-based index `i`.
pub fn weight(i: u64) -> Rational {
    let i = i as i64;
    rational(1, i * i + i)
}

/// `Σᵢ gᵢ / (i² + i)` with `i` starting at 1.
pub fn mixture<T: StagedKind>(family: &[T]) -> Result<T> {
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let s_max = family.iter().map(|g| g.staged().s_max()).max().unwrap_or(0);
    let mut points: BTreeMap<BitString, Vec<usize>> = BTreeMap::new();
    for g in family {
        for (x, h) in g.staged().histories() {
            points.entry(x.clone()).or_default().extend(h.iter().map(|(s, _)| *s));
        }
    }
    let weights: Vec<Rational> = (1..=family.len() as u64).map(weight).collect();
    let mut out = Staged::new(s_max);
    for (x, mut stages) in points {
        stages.sort_unstable();
        stages.dedup();
        out.touch(x.clone());
        for s in stages {
            let v: Rational = family
                .iter()
                .zip(&weights)
                .map(|(g, w)| g.staged().value(&x, s) * w)
                .sum();
            out.set(x.clone(), s, v);
        }
    }
    out.compact();
    Ok(T::from_staged(out))
}

/// An integer power of two `2^log2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PowerOfTwo(pub u32);

impl PowerOfTwo {
    pub fn log2(self) -> u32 {
        self.0
    }

    pub fn value(self) -> BigUint {
        BigUint::one() << self.0
    }

    pub fn to_rational(self) -> Rational {
        pow2(i64::from(self.0))
    }

    pub fn to_dyadic(self) -> Dyadic {
        Dyadic::new(self.value(), 0)
    }

    /// `c/2`, or `None` for `c = 1`.
    pub fn half(self) -> Option<PowerOfTwo> {
        self.0.checked_sub(1).map(PowerOfTwo)
    }

    /// Smallest power of two (at least 1) that is `≥ r`.
    pub fn at_least(r: &Rational) -> PowerOfTwo {
        if !r.is_positive() {
            return PowerOfTwo(0);
        }
        PowerOfTwo(ceil_log2(r).max(0) as u32)
    }

    /// Smallest power of two (at least 1) that is `> r`.
    pub fn exceeding(r: &Rational) -> PowerOfTwo {
        if *r < Rational::one() {
            return PowerOfTwo(0);
        }
        PowerOfTwo(crate::cantor::ratio::floor_log2(r) as u32 + 1)
    }
}

impl fmt::Display for PowerOfTwo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// Smallest power of two `c` with `g(x,s) ≤ c·f(x,s)` on the support of `g`.
pub fn dominance_constant(g: &Staged, f: &Staged, s: usize) -> Result<PowerOfTwo> {
    let mut c = PowerOfTwo(0);
    for x in g.support() {
        let gv = g.value(x, s);
        if gv.is_zero() {
            continue;
        }
        let fv = f.value(x, s);
        if fv.is_zero() {
            return Err(Error::NotDominated(x.clone()));
        }
        c = c.max(PowerOfTwo::at_least(&(gv / fv)));
    }
    Ok(c)
}

/// A complexity value; `Infinite` outside the support.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Complexity {
    Finite(i64),
    Infinite,
}

impl Complexity {
    pub fn finite(self) -> Option<i64> {
        match self {
            Complexity::Finite(k) => Some(k),
            Complexity::Infinite => None,
        }
    }
}

impl fmt::Display for Complexity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Complexity::Finite(k) => write!(f, "{k}"),
            Complexity::Infinite => f.write_str("inf"),
        }
    }
}

/// `K_s(x) = −‖m(x, s)‖`.
pub fn complexity(m: &Staged, x: &BitString, s: usize) -> Complexity {
    match norm_exponent(&m.value(x, s)) {
        Ok(e) => Complexity::Finite(-e),
        Err(_) => Complexity::Infinite,
    }
}

/// `Σ_{y ≠ ε} m(xy, s)`.
pub fn tail_sum(m: &Staged, x: &BitString, s: usize) -> Rational {
    m.strict_extensions(x).map(|y| m.value(y, s)).sum()
}
