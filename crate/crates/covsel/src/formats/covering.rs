//! Covering files:
//! `{"epsilon", "representatives", "assignment": {rep: [ids]}, "uncovered", "bounds"}`.
//! Assignment keys follow the greedy pick order.

use std::collections::BTreeMap;
use std::path::Path;

use covsel_core::setcover::Pick;
use covsel_core::{Covering, CoveringBounds, SourceId};
use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

use super::read_json;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundsRecord {
    pub greedy: usize,
    pub lower: usize,
    pub exact: Option<usize>,
    pub exact_complete: bool,
}

impl From<&CoveringBounds> for BoundsRecord {
    fn from(b: &CoveringBounds) -> Self {
        Self { greedy: b.greedy_size, lower: b.lower_bound, exact: b.exact_size, exact_complete: b.exact_complete }
    }
}

struct Assignment<'a>(&'a [Pick]);

impl Serialize for Assignment<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for pick in self.0 {
            map.serialize_entry(&pick.representative.to_string(), &pick.covered)?;
        }
        map.end()
    }
}

#[derive(Serialize)]
struct CoveringOut<'a> {
    epsilon: f64,
    representatives: Vec<SourceId>,
    assignment: Assignment<'a>,
    uncovered: &'a [SourceId],
    bounds: BoundsRecord,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CoveringIn {
    epsilon: f64,
    representatives: Vec<SourceId>,
    assignment: BTreeMap<String, Vec<SourceId>>,
    uncovered: Vec<SourceId>,
    bounds: BoundsRecord,
}

pub fn covering_to_json(covering: &Covering, bounds: BoundsRecord) -> String {
    super::to_json(&CoveringOut {
        epsilon: covering.epsilon(),
        representatives: covering.representatives(),
        assignment: Assignment(covering.picks()),
        uncovered: covering.uncovered(),
        bounds,
    })
}

pub fn write_covering(path: &Path, covering: &Covering, bounds: BoundsRecord) -> Result<()> {
    super::write_string(path, &covering_to_json(covering, bounds))
}

/// Reads a covering back. The source universe is every assigned or
/// uncovered source, in ascending order.
pub fn read_covering(path: &Path) -> Result<(Covering, BoundsRecord)> {
    let raw: CoveringIn = read_json(path)?;
    let invalid = |msg: String| Error::Config(format!("{}: {msg}", path.display()));
    let mut assignment: BTreeMap<SourceId, Vec<SourceId>> = BTreeMap::new();
    for (key, covered) in raw.assignment {
        let rep: SourceId = key.parse().map_err(|_| invalid(format!("assignment key `{key}` is not a source id")))?;
        assignment.insert(rep, covered);
    }
    if assignment.len() != raw.representatives.len() || raw.representatives.iter().any(|r| !assignment.contains_key(r))
    {
        return Err(invalid("representatives and assignment keys differ".into()));
    }
    let picks: Vec<Pick> =
        raw.representatives.iter().map(|r| Pick { representative: *r, covered: assignment[r].clone() }).collect();
    let mut universe: Vec<SourceId> =
        picks.iter().flat_map(|p| p.covered.iter().copied()).chain(raw.uncovered.iter().copied()).collect();
    universe.sort_unstable();
    let covering =
        Covering::from_parts(raw.epsilon, universe, picks, raw.uncovered).map_err(|e| invalid(e.to_string()))?;
    Ok((covering, raw.bounds))
}
