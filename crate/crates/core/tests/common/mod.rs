#![allow(dead_code)]

use std::collections::BTreeSet;

use num_bigint::BigUint;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use kforge::cantor::{BitString, Dyadic, Rational};
use kforge::pct::LevelBound;
use kforge::mltest::{expectation, test_value};
use kforge::pct::{pushforward, use_bound};
use kforge::reduction::{
    chain_point, decode, find_witness, supported_targets, verify_chain, ReductionInstance,
};
use kforge::semimeasure::{Staged, StagedDistribution, StagedKind, StagedSemimeasure};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn bs(s: &str) -> BitString {
    s.parse().unwrap()
}

fn dyadic(units: u64, exponent: u32) -> Rational {
    Dyadic::new(BigUint::from(units), exponent).to_rational()
}

/// Random prefix-closed set of at most `size` strings of length at most
/// `max_depth`, always containing ε.
pub fn random_tree(r: &mut impl Rng, size: usize, max_depth: usize) -> Vec<BitString> {
    let mut tree = BTreeSet::from([BitString::empty()]);
    let mut frontier = vec![BitString::empty()];
    while tree.len() < size && !frontier.is_empty() {
        let i = r.gen_range(0..frontier.len());
        let x = frontier[i].clone();
        if x.len() >= max_depth {
            frontier.swap_remove(i);
            continue;
        }
        let child = x.child(r.gen());
        if tree.insert(child.clone()) {
            frontier.push(child);
        } else if tree.contains(&x.child(false)) && tree.contains(&x.child(true)) {
            frontier.swap_remove(i);
        }
    }
    let mut out: Vec<BitString> = tree.into_iter().collect();
    out.sort_by(BitString::shortlex_cmp);
    out
}

/// Random nondecreasing positive levels for lengths `0..=max_len`, between
/// `low` and `high`.
pub fn random_bound(r: &mut impl Rng, max_len: usize, low: u32, high: u32) -> LevelBound {
    let mut t = r.gen_range(low..=low + 2).min(high);
    let mut levels = Vec::with_capacity(max_len + 1);
    for _ in 0..=max_len {
        levels.push(t);
        t = (t + r.gen_range(0..=1)).min(high);
    }
    LevelBound::new(levels).unwrap()
}

/// A random superadditive increment with root `root_units·2^-t(0)`, in
/// units of `2^-t(|x|)` per string (shortlex `tree`).
fn increment(
    r: &mut impl Rng,
    tree: &[BitString],
    bound: &LevelBound,
    root_units: u64,
) -> Vec<(BitString, u64)> {
    let set: BTreeSet<&BitString> = tree.iter().collect();
    let mut values = std::collections::BTreeMap::new();
    values.insert(BitString::empty(), root_units);
    for x in tree {
        let v = values[x];
        let t = bound.at(x.len()).unwrap();
        let Some(tc) = bound.at(x.len() + 1) else { continue };
        let mut avail = v << (tc - t);
        let kids: Vec<BitString> = [false, true]
            .into_iter()
            .map(|b| x.child(b))
            .filter(|c| set.contains(c))
            .collect();
        for c in kids {
            let take = if avail == 0 { 0 } else { r.gen_range(0..=avail) };
            avail -= take;
            values.insert(c, take);
        }
    }
    tree.iter().map(|x| (x.clone(), values[x])).collect()
}

/// Staged semimeasure on a random tree meeting the grid precondition of
/// `bound`: a sum of random superadditive increments at up to `stages`
/// random stages.
pub fn random_grid_semimeasure(
    r: &mut impl Rng,
    tree: &[BitString],
    bound: &LevelBound,
    stages: usize,
) -> StagedSemimeasure {
    let t0 = bound.at(0).unwrap();
    let full = 1u64 << t0;
    let mut used = 0u64;
    let mut totals: Vec<(BitString, u64)> = tree.iter().map(|x| (x.clone(), 0)).collect();
    let mut staged = Staged::new(stages.saturating_sub(1));
    for x in tree {
        staged.touch(x.clone());
    }
    let mut points: Vec<usize> = (0..stages).filter(|_| r.gen_bool(0.3)).collect();
    if points.is_empty() {
        points.push(0);
    }
    for s in points {
        let remaining = full - used;
        if remaining == 0 {
            break;
        }
        let root = r.gen_range(1..=(remaining / 4).max(1));
        used += root;
        for ((x, total), (_, inc)) in totals.iter_mut().zip(increment(r, tree, bound, root)) {
            if inc > 0 {
                *total += inc;
                let t = bound.at(x.len()).unwrap();
                staged.set(x.clone(), s, dyadic(*total, t));
            }
        }
    }
    StagedSemimeasure::from_staged(staged)
}

/// Staged distribution positive on all of `tree` at the last stage, with
/// total mass at most 1 and a few change points per string. With `early`,
/// every string is positive from stage 0 on with at least half its final
/// value, so the round-up stays on the final grid.
pub fn random_distribution(
    r: &mut impl Rng,
    tree: &[BitString],
    stages: usize,
    early: bool,
) -> StagedDistribution {
    let weights: Vec<u64> = tree.iter().map(|_| r.gen_range(1..=8)).collect();
    let sum: u64 = weights.iter().sum();
    let e = 64 - (sum - 1).leading_zeros() + r.gen_range(0..=3);
    let last = stages.saturating_sub(1);
    let mut staged = Staged::new(last);
    for (x, w) in tree.iter().zip(weights) {
        // Earlier points are in units of 2^-(e+2), below the final 4w.
        let n = r.gen_range(0..=2usize);
        let mut ss: Vec<usize> = (0..n).map(|_| r.gen_range(1..=last.max(1))).collect();
        if early || r.gen_bool(0.5) {
            ss.push(0);
        }
        ss.sort_unstable();
        ss.dedup();
        let mut prev = if early { 2 * w - 1 } else { 0 };
        for s in ss.into_iter().filter(|s| *s < last) {
            if prev + 1 >= 4 * w {
                break;
            }
            let part = r.gen_range(prev + 1..4 * w);
            staged.set(x.clone(), s, dyadic(part, e + 2));
            prev = part;
        }
        staged.set(x.clone(), last, dyadic(w, e));
    }
    StagedDistribution::from_staged(staged)
}

/// An arbitrary staged semimeasure (not on any grid) supported inside `tree`.
pub fn random_semimeasure(r: &mut impl Rng, tree: &[BitString], stages: usize) -> StagedSemimeasure {
    let max_len = tree.iter().map(BitString::len).max().unwrap_or(0);
    let bound = random_bound(r, max_len, 2, 10);
    random_grid_semimeasure(r, tree, &bound, stages)
}

/// Families for a full instance: distributions share the first member's
/// tree (at most `m_size` strings); semimeasures live on subtrees of it.
pub fn random_families(
    r: &mut impl Rng,
    m_size: usize,
    max_depth: usize,
    stages: usize,
) -> (Vec<StagedDistribution>, Vec<StagedSemimeasure>) {
    let tree = random_tree(r, m_size, max_depth);
    let ns = r.gen_range(1..=3);
    let fs = (0..ns)
        .map(|i| {
            let t = if i == 0 {
                tree.clone()
            } else {
                subtree(r, &tree)
            };
            random_distribution(r, &t, stages, i == 0)
        })
        .collect();
    let no = r.gen_range(1..=3);
    let fo = (0..no)
        .map(|_| {
            let t = subtree(r, &tree);
            random_semimeasure(r, &t, stages)
        })
        .collect();
    (fs, fo)
}

/// Random prefix-closed subset of a prefix-closed shortlex `tree`.
pub fn subtree(r: &mut impl Rng, tree: &[BitString]) -> Vec<BitString> {
    let mut keep = BTreeSet::from([BitString::empty()]);
    for x in tree.iter().skip(1) {
        if keep.contains(&x.parent().unwrap()) && r.gen_bool(0.7) {
            keep.insert(x.clone());
        }
    }
    tree.iter().filter(|x| keep.contains(x)).cloned().collect()
}

pub fn micro_paths() -> (std::path::PathBuf, std::path::PathBuf) {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    (dir.join("micro_s.json"), dir.join("micro_omega.json"))
}

pub fn micro_families() -> (Vec<StagedDistribution>, Vec<StagedSemimeasure>) {
    let (s, o) = micro_paths();
    let fs = kforge::fixture::Fixture::load(&s).unwrap();
    let fo = kforge::fixture::Fixture::load(&o).unwrap();
    (fs.distributions().unwrap(), fo.semimeasures().unwrap())
}

/// The reduction's guarantees on one instance, checked directly.
pub fn theorem(inst: &ReductionInstance) -> Result<(), String> {
    let depth = inst.default_depth();
    let s = inst.s_max();
    if pushforward(inst.allocation(), s) != inst.mprime() {
        return Err("pushforward differs from M'".into());
    }
    let e = expectation(&inst.test(), s).map_err(|e| e.to_string())?;
    let c = inst.c().to_rational();
    for x in inst.domain() {
        let mp = inst.mprime_at(x);
        if mp.is_zero() {
            continue;
        }
        let w = find_witness(inst, x, depth).map_err(|e| e.to_string())?;
        if w.is_empty() {
            return Err(format!("empty witness for {x:?}"));
        }
        if w.measure().to_rational() < mp.to_rational() - &e / &c {
            return Err(format!("witness of {x:?} below the Markov bound"));
        }
    }
    for a in supported_targets(inst) {
        let chain = verify_chain(inst, &a, depth).map_err(|e| e.to_string())?;
        if chain.windows(2).any(|w| !w[1].1.is_subset(&w[0].1)) {
            return Err(format!("chain for {a:?} not nested"));
        }
        let w = chain_point(&chain).ok_or("empty chain")?;
        if !a.is_prefix_of(&decode(inst, &w)) {
            return Err(format!("round trip fails for {a:?}"));
        }
        if test_value(&inst.test(), &w, s) > c {
            return Err(format!("witness point {w:?} fails the test"));
        }
        let t = use_bound(inst.allocation(), a.len()).unwrap() as usize;
        if !a.is_prefix_of(&decode(inst, &w.prefix(t.min(w.len())))) {
            return Err(format!("use bound fails for {a:?}"));
        }
    }
    Ok(())
}
