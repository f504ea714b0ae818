use std::collections::{BTreeMap, BTreeSet};

use super::{complexity, tail_sum, StagedDistribution, StagedSemimeasure};
use crate::cantor::{BitString, Dyadic, Rational};
use crate::error::{Error, Result};

/// A single-stage semimeasure with binary values.
pub type Snapshot = BTreeMap<BitString, Dyadic>;

/// Rounds `M` up to short binary values at stage `s`.
///
/// For every `x` in the prefix closure of both supports,
/// `M₁(x) = (M(x,s) + Σ_{y≠ε} m(xy,s)) / 2` is rounded up to the grid
/// `2^-(K_s(x)+1)`. The tail term absorbs the rounding increments of the
/// children, each at most `m(child)/2`, so the result stays superadditive;
/// halving keeps the root at most 1.
pub fn round_up_monotone(
    big_m: &StagedSemimeasure,
    m: &StagedDistribution,
    s: usize,
) -> Result<Snapshot> {
    let domain: BTreeSet<BitString> = m
        .support()
        .chain(big_m.support())
        .flat_map(|x| x.prefixes().collect::<Vec<_>>())
        .collect();

    let two = Rational::from_integer(2.into());
    let mut out = Snapshot::new();
    for x in domain {
        let k = complexity(m, &x, s)
            .finite()
            .ok_or_else(|| Error::ComplexityUndefined { x: x.clone(), stage: s })?;
        let halved = (big_m.value(&x, s) + tail_sum(m, &x, s)) / &two;
        let grid = u32::try_from(k + 1).unwrap_or(0);
        out.insert(x, Dyadic::ceil_to_grid(&halved, grid));
    }
    Ok(out)
}

/// Grid exponent `K_s(x) + 1` used by the round-up, when `m(x,s) > 0`.
pub fn round_up_grid(m: &StagedDistribution, x: &BitString, s: usize) -> Option<u32> {
    complexity(m, x, s)
        .finite()
        .map(|k| u32::try_from(k + 1).unwrap_or(0))
}
