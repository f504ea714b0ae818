//! The full invariant suite run against a built or loaded instance.

use std::fmt::Write as _;

use num_traits::One;

use crate::cantor::ratio::{format_rational, pow2};
use crate::cantor::{BitString, ClopenSet, Dyadic, Rational};
use crate::mltest::{expectation, tau_clopen, test_value};
use crate::pct::{apply, is_excluded, pushforward, use_bound, Allocation};
use crate::reduction::{
    chain_point, decode, dominance_c, dominates, instance_fail_region, supported_targets,
    verify_chain, witness_summaries, ReductionInstance,
};
use crate::semimeasure::{
    complexity, round_up_grid, validate_distribution, validate_semimeasure, Snapshot,
};

/// Outcome of one invariant; `detail` names the first counterexample.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub name: &'static str,
    pub ok: bool,
    pub detail: String,
}

impl Check {
    fn from_result(name: &'static str, r: Result<(), String>) -> Self {
        match r {
            Ok(()) => Check { name, ok: true, detail: String::new() },
            Err(detail) => Check { name, ok: false, detail },
        }
    }
}

/// Linear-scan oracle for `uΩ ⊆ set`: a member is a prefix of `u`, or the
/// members below `u` fill it. Members of an antichain are disjoint.
fn scan_contains(set: &ClopenSet, u: &BitString) -> bool {
    if set.iter().any(|c| c.is_prefix_of(u)) {
        return true;
    }
    let below: Rational = set
        .iter()
        .filter(|c| u.is_prefix_of(c))
        .map(|c| pow2(-(c.len() as i64)))
        .sum();
    below == pow2(-(u.len() as i64))
}

fn scan_meets(set: &ClopenSet, u: &BitString) -> bool {
    set.iter().any(|c| c.is_comparable(u))
}

fn stages_of(inst: &ReductionInstance) -> Vec<usize> {
    let mut v: Vec<usize> = inst
        .mprime_staged()
        .change_points()
        .into_iter()
        .chain(inst.allocation().change_points())
        .chain([inst.s_max()])
        .filter(|s| *s <= inst.s_max())
        .collect();
    v.sort_unstable();
    v.dedup();
    v
}

fn mprime_snapshot(inst: &ReductionInstance, s: usize) -> Result<Snapshot, String> {
    inst.mprime_staged()
        .support()
        .map(|x| {
            let v = inst.mprime_staged().value(x, s);
            Dyadic::from_rational(&v)
                .map(|d| (x.clone(), d))
                .ok_or_else(|| format!("M'({x:?}, {s}) = {} is not binary", format_rational(&v)))
        })
        .collect()
}

fn check_grid(inst: &ReductionInstance) -> Result<(), String> {
    for x in inst.domain() {
        let t = inst
            .bound()
            .at(x.len())
            .ok_or_else(|| format!("no level for {x:?}"))?;
        for (s, v) in inst.mprime_staged().history(x) {
            let d = Dyadic::from_rational(v)
                .ok_or_else(|| format!("M'({x:?}, {s}) is not binary"))?;
            if !d.is_on_grid(t) {
                return Err(format!("M'({x:?}, {s}) = {d} is off the 2^-{t} grid"));
            }
            if s >= &inst.replay_from() && !d.is_zero() {
                let k = round_up_grid(inst.m(), x, *s)
                    .ok_or_else(|| format!("m({x:?}, {s}) = 0 under positive M'"))?;
                if !d.is_on_grid(k) {
                    return Err(format!("M'({x:?}, {s}) = {d} is finer than 2^-(K+1) = 2^-{k}"));
                }
            }
        }
    }
    Ok(())
}

fn check_levels(inst: &ReductionInstance) -> Result<(), String> {
    let s = inst.s_max();
    for x in inst.domain() {
        let k = complexity(inst.m(), x, s)
            .finite()
            .ok_or_else(|| format!("K({x:?}) undefined"))?;
        let t = inst.bound().at(x.len()).unwrap_or(0);
        if i64::from(t) < k + crate::reduction::LEVEL_SLACK {
            return Err(format!("t_level({}) = {t} below K({x:?}) + 3 = {}", x.len(), k + 3));
        }
    }
    Ok(())
}

fn check_pushforward(inst: &ReductionInstance) -> Result<(), String> {
    for s in stages_of(inst) {
        let want = mprime_snapshot(inst, s)?;
        let got = pushforward(inst.allocation(), s);
        if got != want {
            let x = want
                .keys()
                .chain(got.keys())
                .find(|x| want.get(*x) != got.get(*x))
                .cloned()
                .unwrap_or_default();
            return Err(format!(
                "stage {s}, x {x:?}: λ(B) = {}, M' = {}",
                got.get(&x).map(ToString::to_string).unwrap_or_default(),
                want.get(&x).map(ToString::to_string).unwrap_or_default()
            ));
        }
    }
    Ok(())
}

/// Nesting, sibling disjointness, depth bound and stage monotonicity.
pub fn allocation_invariants(a: &Allocation, stages: &[usize]) -> Vec<Check> {
    let mut nesting = Ok(());
    let mut disjoint = Ok(());
    let mut depth = Ok(());
    let mut monotone = Ok(());
    for x in a.domain() {
        let t = a.bound().at(x.len()).unwrap_or(0) as usize;
        let mut prev: Option<(usize, ClopenSet)> = None;
        for &s in stages {
            let b = a.cell(x, s);
            if nesting.is_ok() {
                if let Some(p) = x.parent() {
                    if !b.is_subset(&a.cell(&p, s)) {
                        nesting = Err(format!("stage {s}: B({x:?}) not inside B({p:?})"));
                    }
                }
            }
            if disjoint.is_ok() && x.last_bit() == Some(false) {
                let sib = x.sibling().unwrap();
                if !b.is_disjoint(&a.cell(&sib, s)) {
                    disjoint = Err(format!("stage {s}: B({x:?}) meets B({sib:?})"));
                }
            }
            if depth.is_ok() && b.depth() > t {
                depth = Err(format!("stage {s}: depth of B({x:?}) is {} > {t}", b.depth()));
            }
            if monotone.is_ok() {
                if let Some((ps, pb)) = &prev {
                    if !pb.is_subset(&b) {
                        monotone = Err(format!("B({x:?}) shrinks between stages {ps} and {s}"));
                    }
                }
            }
            prev = Some((s, b));
        }
    }
    vec![
        Check::from_result("allocation nesting", nesting),
        Check::from_result("sibling disjointness", disjoint),
        Check::from_result("allocation depth", depth),
        Check::from_result("allocation stage monotonicity", monotone),
    ]
}

fn check_dominance(inst: &ReductionInstance) -> Vec<Check> {
    let c = inst.c();
    let strict = if dominates(inst, c) {
        Ok(())
    } else {
        Err(format!("τ(B(x)) < {c}·M'(x) fails somewhere"))
    };
    let minimal = match c.half() {
        Some(h) if dominates(inst, h) => Err(format!("c/2 = {h} also dominates")),
        _ => Ok(()),
    };
    let recomputed = dominance_c(inst);
    let matches = if recomputed == c {
        Ok(())
    } else {
        Err(format!("stored c = {c}, recomputed {recomputed}"))
    };
    vec![
        Check::from_result("dominance strict", strict),
        Check::from_result("dominance minimal", minimal),
        Check::from_result("dominance constant", matches),
    ]
}

fn check_test(inst: &ReductionInstance, depth: usize) -> Result<Vec<Check>, String> {
    let s = inst.s_max();
    let test = inst.test();
    let e = expectation(&test, s).map_err(|e| e.to_string())?;
    let omega = tau_clopen(&test, &ClopenSet::omega(), s);
    let expect = Check::from_result(
        "expectation",
        if omega == e && e <= Rational::one() {
            Ok(())
        } else {
            Err(format!("τ(Ω) = {}, expectation {}", format_rational(&omega), format_rational(&e)))
        },
    );
    let fail = instance_fail_region(inst, depth).map_err(|e| e.to_string())?;
    let c = inst.c().to_rational();
    let markov = fail.measure().to_rational();
    let markov_check = Check::from_result(
        "markov bound",
        if &markov * &c <= e {
            Ok(())
        } else {
            Err(format!("λ(fail) = {} > E/c", format_rational(&markov)))
        },
    );

    let mut witnesses = Ok(());
    let mut measure = Ok(());
    let mut passing = Ok(());
    match witness_summaries(inst, depth) {
        Err(err) => witnesses = Err(err.to_string()),
        Ok(list) => {
            for w in &list {
                if witnesses.is_ok() && (w.witness.is_empty() || !w.witness.is_subset(&inst.cell(&w.x))) {
                    witnesses = Err(format!("witness for {:?} is empty or outside B(x)", w.x));
                }
                if measure.is_ok() && w.witness.measure().to_rational() < w.mprime.to_rational() - &e / &c {
                    measure = Err(format!("λ(witness {:?}) below M' − E/c", w.x));
                }
                if passing.is_ok()
                    && (test_value(&test, &w.point, s) > c || !w.witness.is_disjoint(&fail))
                {
                    passing = Err(format!("witness for {:?} meets the fail region", w.x));
                }
            }
            let positive = inst.domain().filter(|x| !inst.mprime_at(x).is_zero()).count();
            if witnesses.is_ok() && list.len() != positive {
                witnesses = Err(format!("{} witnesses for {positive} strings", list.len()));
            }
        }
    }
    Ok(vec![
        expect,
        markov_check,
        Check::from_result("witnesses nonempty", witnesses),
        Check::from_result("witness measure", measure),
        Check::from_result("witness passes test", passing),
    ])
}

fn check_chains(inst: &ReductionInstance, depth: usize) -> Vec<Check> {
    let mut nested = Ok(());
    let mut round_trip = Ok(());
    let mut use_ok = Ok(());
    for a in supported_targets(inst) {
        let chain = match verify_chain(inst, &a, depth) {
            Ok(c) => c,
            Err(e) => {
                nested = Err(format!("{a:?}: {e}"));
                break;
            }
        };
        if nested.is_ok() {
            let bad = chain
                .windows(2)
                .any(|w| !w[1].1.is_subset(&w[0].1))
                || chain.iter().any(|(_, c)| c.is_empty());
            if bad {
                nested = Err(format!("chain for {a:?} is not nested and nonempty"));
            }
        }
        let Some(point) = chain_point(&chain) else { continue };
        let out = decode(inst, &point);
        if round_trip.is_ok() && !a.is_prefix_of(&out) {
            round_trip = Err(format!("decode({point:?}) = {out:?} does not extend {a:?}"));
        }
        if use_ok.is_ok() {
            let t = use_bound(inst.allocation(), a.len()).unwrap_or(0) as usize;
            let cut = point.prefix(t.min(point.len()));
            if !a.is_prefix_of(&decode(inst, &cut)) {
                use_ok = Err(format!("{t} input bits of {point:?} do not certify {a:?}"));
            }
        }
    }
    vec![
        Check::from_result("chains nested", nested),
        Check::from_result("decode round trip", round_trip),
        Check::from_result("use bound", use_ok),
    ]
}

/// `apply`, `preimage` and `is_excluded` against exhaustive evaluation on
/// every cylinder up to `depth`.
pub fn duality_checks(a: &Allocation, s: usize, depth: usize) -> Vec<Check> {
    let mut duality = Ok(());
    let mut excluded = Ok(());
    let domain: Vec<&BitString> = a.domain().collect();
    for u in BitString::all_up_to_length(depth) {
        let out = apply(a, &u, s);
        for x in domain.iter().filter(|x| !x.is_empty()) {
            let inside = scan_contains(&a.cell(x, s), &u);
            if inside != x.is_prefix_of(&out) && duality.is_ok() {
                duality = Err(format!("u {u:?}, x {x:?}: apply = {out:?}, scan contains = {inside}"));
            }
        }
        if excluded.is_err() {
            continue;
        }
        for v in BitString::all_up_to_length(depth.min(a.bound().max_len())) {
            let scan = v
                .prefixes()
                .filter(|y| a.in_domain(y))
                .any(|y| !scan_meets(&a.cell(&y, s), &u));
            if scan != is_excluded(a, &u, &v, s) {
                excluded = Err(format!("u {u:?}, v {v:?}: is_excluded disagrees"));
                break;
            }
        }
    }
    vec![
        Check::from_result("apply/preimage duality", duality),
        Check::from_result("is_excluded oracle", excluded),
    ]
}

/// Runs every check. `depth_cap` bounds the fail-region depth and the size
/// of the exhaustive duality sweep.
pub fn verify_instance(inst: &ReductionInstance, depth_cap: usize) -> Vec<Check> {
    let mut out = vec![
        Check::from_result(
            "m is a distribution",
            validate_distribution(inst.m()).map_err(|v| v.to_string()),
        ),
        Check::from_result(
            "M' is a semimeasure",
            validate_semimeasure(inst.mprime_staged()).map_err(|v| v.to_string()),
        ),
        Check::from_result("M' on level grid", check_grid(inst)),
        Check::from_result("level bound", check_levels(inst)),
        Check::from_result("pushforward equals M'", check_pushforward(inst)),
    ];
    out.extend(allocation_invariants(inst.allocation(), &stages_of(inst)));
    out.extend(check_dominance(inst));

    let depth = inst.default_depth();
    if depth > depth_cap {
        out.push(Check {
            name: "exactness depth",
            ok: false,
            detail: format!("depth {depth} exceeds the cap {depth_cap}"),
        });
    } else {
        match check_test(inst, depth) {
            Ok(checks) => out.extend(checks),
            Err(detail) => out.push(Check { name: "test", ok: false, detail }),
        }
        out.extend(check_chains(inst, depth));
    }
    out.extend(duality_checks(inst.allocation(), inst.s_max(), depth_cap.min(8)));
    out
}

/// One line per check: `ok name` or `FAIL name: detail`.
pub fn report(checks: &[Check]) -> String {
    let mut s = String::new();
    for c in checks {
        if c.ok {
            let _ = writeln!(s, "ok   {}", c.name);
        } else {
            let _ = writeln!(s, "FAIL {}: {}", c.name, c.detail);
        }
    }
    s
}
