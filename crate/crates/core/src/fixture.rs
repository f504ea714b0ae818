//! Family fixture files:
//!
//! ```json
//! { "kind": "distribution" | "semimeasure",
//!   "members": [ { "id": "g1",
//!                  "entries": [ { "x": "01", "stages": [[0, "1/2^3"], [4, "1/2^2"]] } ] } ] }
//! ```
//!
//! Stage lists are sparse; the value at stage `s` is the last listed value
//! with index `≤ s`.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cantor::ratio::format_rational;
use crate::cantor::{BitString, Dyadic};
use crate::error::{Error, Result};
use crate::semimeasure::{Staged, StagedDistribution, StagedKind, StagedSemimeasure};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FixtureKind {
    Distribution,
    Semimeasure,
}

impl fmt::Display for FixtureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FixtureKind::Distribution => "distribution",
            FixtureKind::Semimeasure => "semimeasure",
        })
    }
}

#[derive(Serialize, Deserialize)]
struct RawFixture {
    kind: FixtureKind,
    members: Vec<RawMember>,
}

#[derive(Serialize, Deserialize)]
struct RawMember {
    id: String,
    entries: Vec<RawEntry>,
}

#[derive(Serialize, Deserialize)]
struct RawEntry {
    x: String,
    stages: Vec<(usize, String)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Member {
    pub id: String,
    pub values: Staged,
}

/// A parsed family of staged valuations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fixture {
    pub kind: FixtureKind,
    pub members: Vec<Member>,
}

fn parse_error(position: String, message: impl fmt::Display) -> Error {
    Error::Parse {
        position,
        message: message.to_string(),
    }
}

impl Fixture {
    pub fn parse(text: &str) -> Result<Fixture> {
        let raw: RawFixture = serde_json::from_str(text).map_err(|e| {
            parse_error(format!("line {} column {}", e.line(), e.column()), e)
        })?;
        let mut members = Vec::with_capacity(raw.members.len());
        for (i, member) in raw.members.into_iter().enumerate() {
            let mut values = Staged::new(0);
            for (j, entry) in member.entries.into_iter().enumerate() {
                let at = format!("members[{i}].entries[{j}]");
                let x: BitString = entry
                    .x
                    .parse()
                    .map_err(|e| parse_error(format!("{at}.x"), e))?;
                if values.contains(&x) {
                    return Err(parse_error(format!("{at}.x"), format!("duplicate string {x:?}")));
                }
                values.touch(x.clone());
                let mut last_stage = None;
                for (k, (stage, text)) in entry.stages.into_iter().enumerate() {
                    let pos = format!("{at}.stages[{k}]");
                    if last_stage.is_some_and(|l| stage <= l) {
                        return Err(parse_error(pos, "stage indices must be strictly increasing"));
                    }
                    last_stage = Some(stage);
                    let v: Dyadic = text.parse().map_err(|e| parse_error(pos, e))?;
                    values.set(x.clone(), stage, v.to_rational());
                }
            }
            members.push(Member { id: member.id, values });
        }
        Ok(Fixture {
            kind: raw.kind,
            members,
        })
    }

    pub fn load(path: &Path) -> Result<Fixture> {
        Fixture::parse(&std::fs::read_to_string(path)?)
    }

    pub fn from_members<T: StagedKind>(kind: FixtureKind, members: Vec<(String, T)>) -> Fixture {
        Fixture {
            kind,
            members: members
                .into_iter()
                .map(|(id, v)| Member {
                    id,
                    values: v.staged().clone(),
                })
                .collect(),
        }
    }

    fn expect_kind(&self, kind: FixtureKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::WrongKind {
                expected: kind.to_string(),
                found: self.kind.to_string(),
            });
        }
        Ok(())
    }

    pub fn distributions(&self) -> Result<Vec<StagedDistribution>> {
        self.expect_kind(FixtureKind::Distribution)?;
        Ok(self
            .members
            .iter()
            .map(|m| StagedDistribution::from_staged(m.values.clone()))
            .collect())
    }

    pub fn semimeasures(&self) -> Result<Vec<StagedSemimeasure>> {
        self.expect_kind(FixtureKind::Semimeasure)?;
        Ok(self
            .members
            .iter()
            .map(|m| StagedSemimeasure::from_staged(m.values.clone()))
            .collect())
    }

    /// Serializes in fixture layout. Values off the binary grid (mixture
    /// outputs) are written as `p/q` and will not parse back as a fixture.
    pub fn to_json(&self) -> String {
        let raw = RawFixture {
            kind: self.kind,
            members: self
                .members
                .iter()
                .map(|m| RawMember {
                    id: m.id.clone(),
                    entries: m
                        .values
                        .histories()
                        .map(|(x, h)| RawEntry {
                            x: x.to_string(),
                            stages: h.iter().map(|(s, v)| (*s, format_rational(v))).collect(),
                        })
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&raw).expect("fixture serialization")
    }

    /// SHA-256 of the canonical serialization.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cantor::ratio::rational;

    const SEMI: &str = r#"{ "kind": "semimeasure", "members": [
        { "id": "g1", "entries": [
            { "x": "", "stages": [[0, "1/2^0"]] },
            { "x": "0", "stages": [[0, "1/2^2"], [3, "1/2^1"]] },
            { "x": "1", "stages": [[1, "1/2^2"]] } ] } ] }"#;

    #[test]
    fn parses_sparse_stages() {
        let f = Fixture::parse(SEMI).unwrap();
        assert_eq!(f.kind, FixtureKind::Semimeasure);
        let p = &f.semimeasures().unwrap()[0];
        let zero = BitString::empty().child(false);
        assert_eq!(p.value(&zero, 2), rational(1, 4));
        assert_eq!(p.value(&zero, 3), rational(1, 2));
        assert_eq!(p.s_max(), 3);
        assert!(f.distributions().is_err());
    }

    #[test]
    fn reports_positions() {
        let bad = SEMI.replace("1/2^2\"]] } ]", "3/7\"]] } ]");
        match Fixture::parse(&bad) {
            Err(Error::Parse { position, .. }) => assert_eq!(position, "members[0].entries[2].stages[0]"),
            other => panic!("unexpected {other:?}"),
        }
        let bad_x = SEMI.replace("\"x\": \"1\"", "\"x\": \"2\"");
        match Fixture::parse(&bad_x) {
            Err(Error::Parse { position, .. }) => assert_eq!(position, "members[0].entries[2].x"),
            other => panic!("unexpected {other:?}"),
        }
        match Fixture::parse("{ \"kind\": \"semimeasure\", ") {
            Err(Error::Parse { position, .. }) => assert!(position.starts_with("line 1")),
            other => panic!("unexpected {other:?}"),
        }
        let unordered = SEMI.replace("[[0, \"1/2^2\"], [3, \"1/2^1\"]]", "[[3, \"1/2^2\"], [0, \"1/2^1\"]]");
        assert!(matches!(Fixture::parse(&unordered), Err(Error::Parse { .. })));
    }

    #[test]
    fn serialization_is_canonical() {
        let f = Fixture::parse(SEMI).unwrap();
        let again = Fixture::parse(&f.to_json()).unwrap();
        assert_eq!(f, again);
        assert_eq!(f.digest(), again.digest());
    }
}
