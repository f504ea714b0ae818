//! t-closed partial continuous transforms realized as stage-monotone interval
//! allocations.
//!
//! Each string `x` of the domain is assigned a clopen set `B(x, s)` of inputs
//! with `λ(B(x, s)) = P(x, s)`. Siblings receive disjoint parts of their
//! parent's set and nothing is ever revoked, so an input in `B(x, s)` is
//! certified to produce an output extending `x`. With `t_level` nondecreasing
//! in length every `B(x, s)` is a union of cylinders of depth at most
//! `t_level(|x|)`: membership depends only on that many input bits.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cantor::{BitString, ClopenSet, Dyadic, Rational};
use crate::error::{Error, Result};
use crate::semimeasure::{validate_semimeasure, Snapshot, StagedSemimeasure};

/// Per-length input budget: `t({x}) = t_level(|x|)`, nondecreasing in length.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LevelBound {
    levels: Vec<u32>,
}

impl LevelBound {
    pub fn new(levels: Vec<u32>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidLevelBound("no levels".into()));
        }
        if levels.contains(&0) {
            return Err(Error::InvalidLevelBound("levels must be positive".into()));
        }
        if let Some(n) = levels.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::InvalidLevelBound(format!(
                "decreases between lengths {} and {}",
                n,
                n + 1
            )));
        }
        Ok(Self { levels })
    }

    /// `t_level(n) = n + 1` for `n ≤ max_len`.
    pub fn identity(max_len: usize) -> Self {
        Self {
            levels: (1..=max_len as u32 + 1).collect(),
        }
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    pub fn at(&self, n: usize) -> Option<u32> {
        self.levels.get(n).copied()
    }

    pub fn max_len(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn max_level(&self) -> u32 {
        *self.levels.last().unwrap()
    }

    /// `t(ŝ)`: the largest level over the canonical cylinder strings of `s`.
    pub fn for_set(&self, s: &ClopenSet) -> Option<u32> {
        s.iter()
            .map(|x| self.at(x.len()))
            .try_fold(0, |acc, t| t.map(|t| acc.max(t)))
    }
}

/// The graph of a t-closed transform as a staged map `x ↦ B(x, s)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Allocation {
    bound: LevelBound,
    s_max: usize,
    cells: BTreeMap<BitString, Vec<(usize, ClopenSet)>>,
}

impl Allocation {
    /// An allocation with an empty domain.
    pub fn empty(bound: LevelBound) -> Self {
        Self {
            bound,
            s_max: 0,
            cells: BTreeMap::new(),
        }
    }

    pub(crate) fn from_histories(
        bound: LevelBound,
        s_max: usize,
        cells: BTreeMap<BitString, Vec<(usize, ClopenSet)>>,
    ) -> Self {
        Self { bound, s_max, cells }
    }

    pub fn bound(&self) -> &LevelBound {
        &self.bound
    }

    pub fn s_max(&self) -> usize {
        self.s_max
    }

    pub fn domain(&self) -> impl Iterator<Item = &BitString> {
        self.cells.keys()
    }

    pub fn in_domain(&self, x: &BitString) -> bool {
        self.cells.contains_key(x)
    }

    pub fn history(&self, x: &BitString) -> &[(usize, ClopenSet)] {
        self.cells.get(x).map(Vec::as_slice).unwrap_or(&[])
    }

    /// `B(x, s)`; ∅ before the first allocation and outside the domain.
    pub fn cell(&self, x: &BitString, s: usize) -> ClopenSet {
        let h = self.history(x);
        let idx = h.partition_point(|(stage, _)| *stage <= s);
        idx.checked_sub(1)
            .map(|i| h[i].1.clone())
            .unwrap_or_default()
    }

    /// Stages at which some `B(x, ·)` grows, always including 0.
    pub fn change_points(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .cells
            .values()
            .flat_map(|h| h.iter().map(|(s, _)| *s))
            .chain([0])
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn export(&self, stage: usize) -> AllocationExport {
        AllocationExport {
            t_level: self.bound.levels.clone(),
            stages: self.s_max,
            entries: self
                .cells
                .keys()
                .map(|x| AllocationEntry {
                    x: x.clone(),
                    cells: self.cell(x, stage),
                })
                .collect(),
        }
    }
}

/// Allocation at one stage, as written to golden files.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllocationExport {
    pub t_level: Vec<u32>,
    pub stages: usize,
    pub entries: Vec<AllocationEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllocationEntry {
    pub x: BitString,
    #[serde(rename = "B")]
    pub cells: ClopenSet,
}

fn dyadic_value(x: &BitString, stage: usize, value: &Rational, t: u32) -> Result<Dyadic> {
    Dyadic::from_rational(value)
        .filter(|d| d.is_on_grid(t))
        .ok_or_else(|| Error::BitLength {
            x: x.clone(),
            stage,
            value: crate::cantor::ratio::format_rational(value),
            t_level: t,
        })
}

/// Builds the allocation generating `P` from the uniform measure.
///
/// Stages are replayed in order; within a stage strings are processed in
/// length-then-lexicographic order. The increment `P(x,s) − λ(B(x,s−1))` is
/// taken as the leftmost free part of the parent's set not used by the
/// sibling or by `x` itself. Every value must be an integer multiple of
/// `2^-t_level(|x|)`, which keeps all carving at depth `t_level(|x|)`.
pub fn build_allocation(p: &StagedSemimeasure, bound: &LevelBound) -> Result<Allocation> {
    validate_semimeasure(p).map_err(Error::NotSemimeasure)?;

    let order = p.support_shortlex();
    for x in &order {
        let t = bound.at(x.len()).ok_or_else(|| {
            Error::InvalidLevelBound(format!("no level for length {} of {:?}", x.len(), x))
        })?;
        for (stage, v) in p.history(x) {
            dyadic_value(x, *stage, v, t)?;
        }
    }

    let mut current: BTreeMap<BitString, ClopenSet> =
        order.iter().map(|x| (x.clone(), ClopenSet::empty())).collect();
    let mut cells: BTreeMap<BitString, Vec<(usize, ClopenSet)>> =
        order.iter().map(|x| (x.clone(), Vec::new())).collect();

    for s in p.change_points() {
        for x in &order {
            let t = bound.at(x.len()).unwrap();
            let target = dyadic_value(x, s, &p.value(x, s), t)?;
            let held = &current[x];
            let delta = target
                .checked_sub(&held.measure())
                .expect("stage monotonicity was validated");
            if delta.is_zero() {
                continue;
            }
            let parent_cells = match x.parent() {
                Some(parent) => current[&parent].clone(),
                None => ClopenSet::omega(),
            };
            let mut free = parent_cells.difference(held);
            if let Some(sib) = x.sibling() {
                if let Some(sib_cells) = current.get(&sib) {
                    free = free.difference(sib_cells);
                }
            }
            let taken = free
                .leftmost_portion(&delta)
                .expect("superadditivity leaves enough free space");
            let grown = held.union(&taken);
            debug_assert!(grown.depth() <= t as usize);
            cells.get_mut(x).unwrap().push((s, grown.clone()));
            current.insert(x.clone(), grown);
        }
    }

    Ok(Allocation {
        bound: bound.clone(),
        s_max: p.s_max(),
        cells,
    })
}

/// `{α : A(α) ⊆ xΩ}`, which is `B(x, s)`.
pub fn preimage_cylinder(a: &Allocation, x: &BitString, s: usize) -> Result<ClopenSet> {
    if !a.in_domain(x) {
        return Err(Error::NotInDomain(x.clone()));
    }
    Ok(a.cell(x, s))
}

/// Union of `B(x, s)` over the canonical cylinder strings `x` of `set`.
/// The result has depth at most `t(ŝ)`.
pub fn preimage_clopen(a: &Allocation, set: &ClopenSet, s: usize) -> Result<ClopenSet> {
    let mut out = ClopenSet::empty();
    for x in set.iter() {
        out = out.union(&preimage_cylinder(a, x, s)?);
    }
    Ok(out)
}

/// Longest domain string `x` with `cylinder(u) ⊆ B(x, s)`, or ε when none.
///
/// Certifying an output of length `n` never needs more than `t_level(n)`
/// input bits, since `B(x, s)` is decided at that depth.
pub fn apply(a: &Allocation, u: &BitString, s: usize) -> BitString {
    let mut out = BitString::empty();
    if !a.cell(&out, s).contains_cylinder(u) {
        return out;
    }
    loop {
        let next = [false, true]
            .into_iter()
            .map(|b| out.child(b))
            .find(|c| a.in_domain(c) && a.cell(c, s).contains_cylinder(u));
        match next {
            Some(c) => out = c,
            None => return out,
        }
    }
}

/// Number of input bits sufficient to certify an output of length `n`.
pub fn use_bound(a: &Allocation, n: usize) -> Option<u32> {
    a.bound.at(n)
}

/// `x ↦ λ(B(x, s))` on the domain.
pub fn pushforward(a: &Allocation, s: usize) -> Snapshot {
    a.cells
        .keys()
        .map(|x| (x.clone(), a.cell(x, s).measure()))
        .collect()
}

/// Certifies that the rectangle `uΩ × vΩ` misses the graph: some prefix `y`
/// of `v` in the domain has `uΩ ∩ B(y, s) = ∅`. `false` is not a membership
/// proof.
pub fn is_excluded(a: &Allocation, u: &BitString, v: &BitString, s: usize) -> bool {
    v.prefixes()
        .filter(|y| a.in_domain(y))
        .any(|y| !a.cell(&y, s).meets_cylinder(u))
}
