use std::fmt;

use num_bigint::BigUint;
use num_traits::One;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{BitString, Dyadic};

/// A clopen subset of Cantor space, stored as its canonical cylinder
/// antichain: sorted left to right, no member a prefix of another, and no
/// sibling pair `x0`, `x1` both present.
///
/// Canonical form is unique per point set, so derived equality is set
/// equality.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct ClopenSet {
    cylinders: Vec<BitString>,
}

impl ClopenSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Ω, the cylinder of ε.
    pub fn omega() -> Self {
        Self {
            cylinders: vec![BitString::empty()],
        }
    }

    pub fn cylinder(x: BitString) -> Self {
        Self { cylinders: vec![x] }
    }

    /// Canonicalizes an arbitrary list of cylinder strings.
    pub fn from_cylinders<I: IntoIterator<Item = BitString>>(raw: I) -> Self {
        let mut raw: Vec<BitString> = raw.into_iter().collect();
        raw.sort();
        raw.dedup();

        // Drop members covered by an earlier prefix. In sorted order every
        // string between p and an extension of p also extends p.
        let mut antichain: Vec<BitString> = Vec::with_capacity(raw.len());
        for x in raw {
            match antichain.last() {
                Some(last) if last.is_prefix_of(&x) => {}
                _ => antichain.push(x),
            }
        }

        // Merge sibling pairs into their parent until none remain.
        let mut stack: Vec<BitString> = Vec::with_capacity(antichain.len());
        for x in antichain {
            stack.push(x);
            while stack.len() >= 2 {
                let n = stack.len();
                let (a, b) = (&stack[n - 2], &stack[n - 1]);
                if a.last_bit() == Some(false) && a.sibling().as_ref() == Some(b) {
                    let parent = a.parent().unwrap();
                    stack.truncate(n - 2);
                    stack.push(parent);
                } else {
                    break;
                }
            }
        }
        Self { cylinders: stack }
    }

    pub fn cylinders(&self) -> &[BitString] {
        &self.cylinders
    }

    pub fn iter(&self) -> std::slice::Iter<'_, BitString> {
        self.cylinders.iter()
    }

    pub fn len(&self) -> usize {
        self.cylinders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cylinders.is_empty()
    }

    pub fn is_omega(&self) -> bool {
        self.cylinders.len() == 1 && self.cylinders[0].is_empty()
    }

    pub fn union(&self, other: &ClopenSet) -> ClopenSet {
        ClopenSet::from_cylinders(self.cylinders.iter().chain(&other.cylinders).cloned())
    }

    pub fn intersect(&self, other: &ClopenSet) -> ClopenSet {
        let (a, b) = (&self.cylinders, &other.cylinders);
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < a.len() && j < b.len() {
            if a[i].is_prefix_of(&b[j]) {
                out.push(b[j].clone());
                j += 1;
            } else if b[j].is_prefix_of(&a[i]) {
                out.push(a[i].clone());
                i += 1;
            } else if a[i] < b[j] {
                i += 1;
            } else {
                j += 1;
            }
        }
        ClopenSet::from_cylinders(out)
    }

    pub fn complement(&self) -> ClopenSet {
        fn walk(members: &[BitString], prefix: BitString, out: &mut Vec<BitString>) {
            match members.first() {
                None => out.push(prefix),
                Some(first) if first.len() == prefix.len() => {}
                Some(_) => {
                    let d = prefix.len();
                    let split = members.partition_point(|s| s.bit(d) == Some(false));
                    walk(&members[..split], prefix.child(false), out);
                    walk(&members[split..], prefix.child(true), out);
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.cylinders, BitString::empty(), &mut out);
        ClopenSet::from_cylinders(out)
    }

    /// `self ∖ other`.
    pub fn difference(&self, other: &ClopenSet) -> ClopenSet {
        self.intersect(&other.complement())
    }

    /// Uniform measure λ: the exact sum of `2^-|x|` over the cylinders.
    pub fn measure(&self) -> Dyadic {
        let depth = self.depth() as u32;
        let total: BigUint = self
            .cylinders
            .iter()
            .map(|x| BigUint::one() << (depth - x.len() as u32))
            .sum();
        Dyadic::new(total, depth)
    }

    /// λ(self ∩ yΩ).
    pub fn measure_within(&self, y: &BitString) -> Dyadic {
        if self.contains_cylinder(y) {
            return Dyadic::pow2_neg(y.len() as u32);
        }
        let start = self.cylinders.partition_point(|s| s < y);
        self.cylinders[start..]
            .iter()
            .take_while(|s| y.is_prefix_of(s))
            .map(|s| Dyadic::pow2_neg(s.len() as u32))
            .sum()
    }

    pub fn is_subset(&self, other: &ClopenSet) -> bool {
        self.difference(other).is_empty()
    }

    pub fn is_disjoint(&self, other: &ClopenSet) -> bool {
        self.intersect(other).is_empty()
    }

    /// Longest cylinder string; 0 for Ω and, by convention, for ∅.
    pub fn depth(&self) -> usize {
        self.cylinders.iter().map(BitString::len).max().unwrap_or(0)
    }

    /// `uΩ ⊆ self`, i.e. some member is a prefix of `u`.
    pub fn contains_cylinder(&self, u: &BitString) -> bool {
        let idx = self.cylinders.partition_point(|s| s <= u);
        idx > 0 && self.cylinders[idx - 1].is_prefix_of(u)
    }

    /// `uΩ ∩ self ≠ ∅`.
    pub fn meets_cylinder(&self, u: &BitString) -> bool {
        if self.contains_cylinder(u) {
            return true;
        }
        let start = self.cylinders.partition_point(|s| s < u);
        self.cylinders
            .get(start)
            .is_some_and(|s| u.is_prefix_of(s))
    }

    /// The leftmost part of `self` with measure exactly `amount`, or `None`
    /// when `self` is too small. When every member of `self` and the grid
    /// of `amount` are at depth at most `t`, so is every cylinder taken.
    pub fn leftmost_portion(&self, amount: &Dyadic) -> Option<ClopenSet> {
        let mut remaining = amount.clone();
        let mut taken = Vec::new();
        for c in &self.cylinders {
            if remaining.is_zero() {
                break;
            }
            let size = Dyadic::pow2_neg(c.len() as u32);
            if size <= remaining {
                remaining = remaining.checked_sub(&size).unwrap();
                taken.push(c.clone());
                continue;
            }
            // remaining < λ(c): descend, taking left halves greedily.
            let mut cur = c.clone();
            while !remaining.is_zero() {
                let half = Dyadic::pow2_neg(cur.len() as u32 + 1);
                if half <= remaining {
                    remaining = remaining.checked_sub(&half).unwrap();
                    taken.push(cur.child(false));
                    cur = cur.child(true);
                } else {
                    cur = cur.child(false);
                }
            }
        }
        remaining
            .is_zero()
            .then(|| ClopenSet::from_cylinders(taken))
    }

    /// Among the longest cylinders, the leftmost one.
    pub fn leftmost_deepest(&self) -> Option<&BitString> {
        let depth = self.depth();
        self.cylinders.iter().find(|c| c.len() == depth)
    }
}

impl fmt::Display for ClopenSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, c) in self.cylinders.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "\"{c}\"")?;
        }
        f.write_str("]")
    }
}

impl fmt::Debug for ClopenSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromIterator<BitString> for ClopenSet {
    fn from_iter<I: IntoIterator<Item = BitString>>(iter: I) -> Self {
        ClopenSet::from_cylinders(iter)
    }
}

impl Serialize for ClopenSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.cylinders.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ClopenSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = Vec::<BitString>::deserialize(deserializer)?;
        Ok(ClopenSet::from_cylinders(raw))
    }
}
