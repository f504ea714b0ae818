//! Reduction of every supported target string to a test-passing input.
//!
//! The instance couples the dominant distribution `m` (generating the
//! concatenation test `T`) with an allocation `U` whose pushforward of λ is
//! the rounded-up semimeasure `M′`. The constant `c` with
//! `τ(B(x)) < c·M′(x)` on the whole domain guarantees that every `B(x)`
//! meets the pass region `{T ≤ c}`: otherwise `τ(B(x)) ≥ c·λ(B(x))`.
//! Preimages of longer prefixes are nested, so following a target string
//! yields nested nonempty witness sets.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::cantor::{BitString, ClopenSet, Dyadic, Rational};
use crate::error::{Error, Result};
use crate::mltest::{fail_region, tau_clopen, ConcatTest};
use crate::pct::{apply, build_allocation, Allocation, LevelBound};
use crate::semimeasure::{
    complexity, mixture, round_up_monotone, validate_distribution, validate_semimeasure,
    PowerOfTwo, Snapshot, Staged, StagedDistribution, StagedKind, StagedSemimeasure,
};

/// Slack between `K(x)` and the input budget: `t({x}) = K(x) + 3`.
pub const LEVEL_SLACK: i64 = 3;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReductionInstance {
    m: StagedDistribution,
    mprime: StagedSemimeasure,
    bound: LevelBound,
    allocation: Allocation,
    c: PowerOfTwo,
    s_max: usize,
    replay_from: usize,
}

impl ReductionInstance {
    pub fn m(&self) -> &StagedDistribution {
        &self.m
    }

    pub fn test(&self) -> ConcatTest<'_> {
        ConcatTest::new(&self.m)
    }

    /// `M′` replayed from [`Self::replay_from`] to `S_max`.
    pub fn mprime_staged(&self) -> &StagedSemimeasure {
        &self.mprime
    }

    /// `M′` at `S_max`.
    pub fn mprime(&self) -> Snapshot {
        self.mprime
            .support()
            .map(|x| {
                let v = Dyadic::from_rational(&self.mprime.value(x, self.s_max))
                    .expect("M' values are binary");
                (x.clone(), v)
            })
            .collect()
    }

    pub fn mprime_at(&self, x: &BitString) -> Dyadic {
        Dyadic::from_rational(&self.mprime.value(x, self.s_max)).expect("M' values are binary")
    }

    pub fn bound(&self) -> &LevelBound {
        &self.bound
    }

    pub fn allocation(&self) -> &Allocation {
        &self.allocation
    }

    pub fn c(&self) -> PowerOfTwo {
        self.c
    }

    pub fn s_max(&self) -> usize {
        self.s_max
    }

    /// First stage from which the round-up is defined on the whole domain and
    /// on the `t_level` grid; `U` allocates nothing before it.
    pub fn replay_from(&self) -> usize {
        self.replay_from
    }

    pub fn domain(&self) -> impl Iterator<Item = &BitString> {
        self.allocation.domain()
    }

    /// `B(x)` at `S_max`.
    pub fn cell(&self, x: &BitString) -> ClopenSet {
        self.allocation.cell(x, self.s_max)
    }

    /// Smallest depth at which fail regions and witness sets are exact:
    /// the largest level and the longest string supported by `m`.
    pub fn default_depth(&self) -> usize {
        (self.bound.max_level() as usize).max(self.m.max_len())
    }

    pub(crate) fn from_parts(
        m: StagedDistribution,
        mprime: StagedSemimeasure,
        bound: LevelBound,
        allocation: Allocation,
        c: PowerOfTwo,
        s_max: usize,
        replay_from: usize,
    ) -> Self {
        Self {
            m,
            mprime,
            bound,
            allocation,
            c,
            s_max,
            replay_from,
        }
    }
}

/// `t_level(n) = max K(x) + 3` over domain strings of length `n`, made
/// nondecreasing.
fn level_bound(m: &StagedDistribution, domain: &Snapshot, s: usize) -> Result<LevelBound> {
    let max_len = domain.keys().map(BitString::len).max().unwrap_or(0);
    let mut raw = vec![1i64; max_len + 1];
    for x in domain.keys() {
        let k = complexity(m, x, s)
            .finite()
            .ok_or_else(|| Error::ComplexityUndefined { x: x.clone(), stage: s })?;
        raw[x.len()] = raw[x.len()].max(k + LEVEL_SLACK);
    }
    let mut levels = Vec::with_capacity(raw.len());
    let mut running = 1;
    for r in raw {
        running = running.max(r);
        levels.push(u32::try_from(running).expect("level fits in u32"));
    }
    LevelBound::new(levels)
}

fn on_level_grid(snapshot: &Snapshot, bound: &LevelBound) -> bool {
    snapshot
        .iter()
        .all(|(x, v)| bound.at(x.len()).is_some_and(|t| v.is_on_grid(t)))
}

/// Assembles the reduction from the two families.
pub fn build_instance(
    family_s: &[StagedDistribution],
    family_omega: &[StagedSemimeasure],
) -> Result<ReductionInstance> {
    for g in family_s {
        validate_distribution(g).map_err(Error::NotDistribution)?;
    }
    for g in family_omega {
        validate_semimeasure(g).map_err(Error::NotSemimeasure)?;
    }
    let m = mixture(family_s)?;
    let big_m = mixture(family_omega)?;
    let s_max = m.s_max().max(big_m.s_max());

    if big_m.support().all(|x| big_m.value(x, s_max).is_zero()) {
        return Err(Error::EmptySupport);
    }

    let last = round_up_monotone(&big_m, &m, s_max)?;
    let bound = level_bound(&m, &last, s_max)?;

    // Replay M' backwards over the change points while it stays defined and
    // on the level grid; earlier stages contribute nothing.
    let mut points: Vec<usize> = m
        .change_points()
        .union(&big_m.change_points())
        .copied()
        .filter(|s| *s <= s_max)
        .collect();
    points.reverse();
    let mut replay = Vec::new();
    for s in points {
        match round_up_monotone(&big_m, &m, s) {
            Ok(snap) if snap.keys().eq(last.keys()) && on_level_grid(&snap, &bound) => {
                replay.push((s, snap));
            }
            _ => break,
        }
    }
    replay.reverse();
    let replay_from = replay.first().map(|(s, _)| *s).unwrap_or(s_max);

    let mut staged = Staged::new(s_max);
    for x in last.keys() {
        staged.touch(x.clone());
    }
    for (s, snap) in &replay {
        for (x, v) in snap {
            staged.set(x.clone(), *s, v.to_rational());
        }
    }
    staged.compact();
    let mprime = StagedSemimeasure::from_staged(staged);

    let allocation = build_allocation(&mprime, &bound)?;
    let c = dominance_for(&m, &allocation, &mprime, s_max);
    Ok(ReductionInstance {
        m,
        mprime,
        bound,
        allocation,
        c,
        s_max,
        replay_from,
    })
}

fn dominance_for(
    m: &StagedDistribution,
    allocation: &Allocation,
    mprime: &StagedSemimeasure,
    s: usize,
) -> PowerOfTwo {
    let test = ConcatTest::new(m);
    let mut c = PowerOfTwo(0);
    for x in allocation.domain() {
        let weight = mprime.value(x, s);
        let cells = allocation.cell(x, s);
        if weight.is_zero() {
            assert!(cells.is_empty(), "B({x:?}) nonempty with M' = 0");
            continue;
        }
        let tau = tau_clopen(&test, &cells, s);
        c = c.max(PowerOfTwo::exceeding(&(tau / weight)));
    }
    c
}

/// Smallest power of two `c` with `τ(B(x)) < c·M′(x)` for every `x` with
/// `M′(x) > 0`.
pub fn dominance_c(inst: &ReductionInstance) -> PowerOfTwo {
    dominance_for(&inst.m, &inst.allocation, &inst.mprime, inst.s_max)
}

/// True when `τ(B(x)) < c·M′(x)` on every `x` with `M′(x) > 0`.
pub fn dominates(inst: &ReductionInstance, c: PowerOfTwo) -> bool {
    let test = inst.test();
    let c = c.to_rational();
    inst.domain().all(|x| {
        let weight = inst.mprime.value(x, inst.s_max);
        weight.is_zero() || tau_clopen(&test, &inst.cell(x), inst.s_max) < &c * weight
    })
}

fn check_depth(inst: &ReductionInstance, depth: usize) -> Result<()> {
    let required = inst.default_depth();
    if depth < required {
        return Err(Error::DepthTooShallow { depth, required });
    }
    Ok(())
}

/// `{T > c}` at `S_max`.
pub fn instance_fail_region(inst: &ReductionInstance, depth: usize) -> Result<ClopenSet> {
    check_depth(inst, depth)?;
    fail_region(&inst.test(), &inst.c.to_rational(), inst.s_max, depth)
}

fn witness_with(inst: &ReductionInstance, x: &BitString, fail: &ClopenSet) -> Result<ClopenSet> {
    if !inst.allocation.in_domain(x) {
        return Err(Error::TargetOutsideCone(x.clone()));
    }
    let cells = inst.cell(x);
    if cells.is_empty() {
        return Err(Error::TargetOutsideCone(x.clone()));
    }
    let pass = cells.difference(fail);
    if pass.is_empty() {
        return Err(Error::DominanceInvariant(x.clone()));
    }
    Ok(pass)
}

/// `B(x) ∖ {T > c}`: inputs mapping into `xΩ` that pass the test at level `c`.
pub fn find_witness(inst: &ReductionInstance, x: &BitString, depth: usize) -> Result<ClopenSet> {
    let fail = instance_fail_region(inst, depth)?;
    witness_with(inst, x, &fail)
}

/// Witness sets for every prefix of `a`, shortest first; each is contained
/// in the previous one.
pub fn verify_chain(
    inst: &ReductionInstance,
    a: &BitString,
    depth: usize,
) -> Result<Vec<(BitString, ClopenSet)>> {
    let fail = instance_fail_region(inst, depth)?;
    a.prefixes()
        .map(|p| {
            let w = witness_with(inst, &p, &fail)?;
            Ok((p, w))
        })
        .collect()
}

/// The output certified by the input prefix `beta_prefix` at `S_max`.
pub fn decode(inst: &ReductionInstance, beta_prefix: &BitString) -> BitString {
    apply(&inst.allocation, beta_prefix, inst.s_max)
}

/// The leftmost deepest cylinder of the last set in a chain.
pub fn chain_point(chain: &[(BitString, ClopenSet)]) -> Option<BitString> {
    chain
        .last()
        .and_then(|(_, set)| set.leftmost_deepest().cloned())
}

/// Per-string witness data reported in exports.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessSummary {
    pub x: BitString,
    pub mprime: Dyadic,
    pub tau: Rational,
    pub witness: ClopenSet,
    pub point: BitString,
    pub decoded: BitString,
}

/// Witness summaries for every `x` with `M′(x) > 0`.
pub fn witness_summaries(inst: &ReductionInstance, depth: usize) -> Result<Vec<WitnessSummary>> {
    let fail = instance_fail_region(inst, depth)?;
    let test = inst.test();
    let mut out = Vec::new();
    let mut order: Vec<&BitString> = inst.domain().collect();
    order.sort_by(|a, b| a.shortlex_cmp(b));
    for x in order {
        let mprime = inst.mprime_at(x);
        if mprime.is_zero() {
            continue;
        }
        let witness = witness_with(inst, x, &fail)?;
        let point = witness.leftmost_deepest().cloned().expect("nonempty witness");
        out.push(WitnessSummary {
            x: x.clone(),
            tau: tau_clopen(&test, &inst.cell(x), inst.s_max),
            decoded: decode(inst, &point),
            mprime,
            witness,
            point,
        });
    }
    Ok(out)
}

/// Strings whose every prefix has positive `M′`: the targets a chain can follow.
pub fn supported_targets(inst: &ReductionInstance) -> Vec<BitString> {
    let positive: BTreeMap<&BitString, bool> = inst
        .domain()
        .map(|x| (x, !inst.mprime_at(x).is_zero()))
        .collect();
    let mut out: Vec<BitString> = inst
        .domain()
        .filter(|x| x.prefixes().all(|p| positive.get(&p).copied().unwrap_or(false)))
        .cloned()
        .collect();
    out.sort_by(BitString::shortlex_cmp);
    out
}

/// Builds the two mixtures the instance is assembled from.
pub fn mixtures(
    family_s: &[StagedDistribution],
    family_omega: &[StagedSemimeasure],
) -> Result<(StagedDistribution, StagedSemimeasure)> {
    Ok((mixture(family_s)?, mixture(family_omega)?))
}
