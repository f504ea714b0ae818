//! Instance files: everything the query commands need, plus digests of the
//! fixtures the instance was built from.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cantor::ratio::{format_rational, parse_rational};
use crate::cantor::{BitString, ClopenSet, Dyadic};
use crate::error::{Error, Result};
use crate::pct::{Allocation, LevelBound};
use crate::reduction::{witness_summaries, ReductionInstance};
use crate::semimeasure::{PowerOfTwo, Staged, StagedDistribution, StagedKind, StagedSemimeasure};

pub const FORMAT: &str = "kforge-instance/1";

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Digests {
    pub family_s: String,
    pub family_omega: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StagedEntry {
    pub x: BitString,
    pub stages: Vec<(usize, String)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellEntry {
    pub x: BitString,
    pub stages: Vec<(usize, ClopenSet)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessEntry {
    pub x: BitString,
    pub mprime: Dyadic,
    pub tau: String,
    pub witness: ClopenSet,
    pub witness_measure: Dyadic,
    pub point: BitString,
    pub decoded: BitString,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceExport {
    pub format: String,
    pub digests: Digests,
    pub stages: usize,
    pub replay_from: usize,
    pub t_level: Vec<u32>,
    pub c: String,
    pub depth: usize,
    pub m: Vec<StagedEntry>,
    pub mprime: Vec<StagedEntry>,
    pub allocation: Vec<CellEntry>,
    pub witnesses: Vec<WitnessEntry>,
}

fn staged_entries(staged: &Staged) -> Vec<StagedEntry> {
    staged
        .histories()
        .map(|(x, h)| StagedEntry {
            x: x.clone(),
            stages: h.iter().map(|(s, v)| (*s, format_rational(v))).collect(),
        })
        .collect()
}

fn staged_from_entries(entries: &[StagedEntry], s_max: usize) -> Result<Staged> {
    let mut staged = Staged::new(s_max);
    for e in entries {
        staged.touch(e.x.clone());
        for (s, v) in &e.stages {
            staged.set(e.x.clone(), *s, parse_rational(v)?);
        }
    }
    Ok(staged)
}

impl InstanceExport {
    pub fn from_instance(inst: &ReductionInstance, digests: Digests) -> Result<Self> {
        let depth = inst.default_depth();
        let witnesses = witness_summaries(inst, depth)?
            .into_iter()
            .map(|w| WitnessEntry {
                witness_measure: w.witness.measure(),
                x: w.x,
                mprime: w.mprime,
                tau: format_rational(&w.tau),
                witness: w.witness,
                point: w.point,
                decoded: w.decoded,
            })
            .collect();
        let allocation = inst
            .allocation()
            .domain()
            .map(|x| CellEntry {
                x: x.clone(),
                stages: inst.allocation().history(x).to_vec(),
            })
            .collect();
        Ok(Self {
            format: FORMAT.to_string(),
            digests,
            stages: inst.s_max(),
            replay_from: inst.replay_from(),
            t_level: inst.bound().levels().to_vec(),
            c: inst.c().to_string(),
            depth,
            m: staged_entries(inst.m()),
            mprime: staged_entries(inst.mprime_staged()),
            allocation,
            witnesses,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("instance serialization");
        s.push('\n');
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let export: InstanceExport = serde_json::from_str(text).map_err(|e| Error::Parse {
            position: format!("line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        if export.format != FORMAT {
            return Err(Error::Parse {
                position: "format".into(),
                message: format!("unsupported instance format {:?}", export.format),
            });
        }
        Ok(export)
    }

    /// Reconstructs the instance. The stored constant is kept as is; the
    /// verifier recomputes it.
    pub fn to_instance(&self) -> Result<ReductionInstance> {
        let m = StagedDistribution::from_staged(staged_from_entries(&self.m, self.stages)?);
        let mprime = StagedSemimeasure::from_staged(staged_from_entries(&self.mprime, self.stages)?);
        let bound = LevelBound::new(self.t_level.clone())?;
        let cells: BTreeMap<BitString, Vec<(usize, ClopenSet)>> = self
            .allocation
            .iter()
            .map(|e| (e.x.clone(), e.stages.clone()))
            .collect();
        if !cells.keys().eq(mprime.support()) {
            return Err(Error::Instance("allocation domain differs from the M' support".into()));
        }
        let allocation = Allocation::from_histories(bound.clone(), self.stages, cells);
        let c = parse_power_of_two(&self.c)?;
        Ok(ReductionInstance::from_parts(
            m,
            mprime,
            bound,
            allocation,
            c,
            self.stages,
            self.replay_from,
        ))
    }
}

fn parse_power_of_two(text: &str) -> Result<PowerOfTwo> {
    let value: num_bigint::BigUint = text
        .parse()
        .map_err(|_| Error::Instance(format!("c = {text:?} is not an integer")))?;
    let bits = value.bits();
    if bits == 0 || value != num_bigint::BigUint::from(1u8) << (bits - 1) {
        return Err(Error::Instance(format!("c = {text} is not a power of two")));
    }
    Ok(PowerOfTwo(bits as u32 - 1))
}
