//! Covering sources with representatives.
//!
//! Training on source `i` covers every source whose regret is at most
//! `epsilon`. [`greedy_cover`] repeatedly picks the source covering the most
//! still-uncovered sources; [`exact_cover`] finds a minimum covering on small
//! instances and [`lower_bound`] certifies how far greedy can be from it.

mod baseline;
mod exact;

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use fixedbitset::FixedBitSet;

use crate::detector::{RegretMatrix, SourceId};

pub use baseline::{random_baseline, DEFAULT_VARIANTS};
pub use exact::{exact_cover, harmonic, lower_bound, CoveringBounds, ExactOptions};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SetCoverError {
    #[error("epsilon must be finite and non-negative, got {0}")]
    InvalidEpsilon(f64),
    #[error("exact search on {n} sources exceeds the limit of {limit}; raise the limit to override")]
    TooLarge { n: usize, limit: usize },
    #[error("min_cover must be at least 1")]
    ZeroMinCover,
    #[error("cannot draw {k} distinct sources out of {n}")]
    BaselineTooLarge { k: usize, n: usize },
    #[error("at least one baseline variant is required")]
    ZeroVariants,
    #[error("covering is inconsistent: {0}")]
    Inconsistent(&'static str),
}

/// `sets[i]` holds the positions of the sources covered when training on the
/// source at position `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverSets {
    epsilon: f64,
    source_ids: Vec<SourceId>,
    sets: Vec<FixedBitSet>,
}

impl CoverSets {
    /// Builds cover sets from explicit position lists. Every set gets its own
    /// position added so the instance is always coverable.
    pub fn from_sets(epsilon: f64, source_ids: Vec<SourceId>, sets: &[Vec<usize>]) -> Self {
        let n = source_ids.len();
        let sets = sets
            .iter()
            .enumerate()
            .map(|(i, members)| {
                let mut bits = FixedBitSet::with_capacity(n);
                bits.insert(i);
                members.iter().for_each(|&j| bits.insert(j));
                bits
            })
            .collect();
        Self { epsilon, source_ids, sets }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn n(&self) -> usize {
        self.source_ids.len()
    }

    pub fn source_ids(&self) -> &[SourceId] {
        &self.source_ids
    }

    pub fn set(&self, i: usize) -> &FixedBitSet {
        &self.sets[i]
    }

    pub fn sets(&self) -> &[FixedBitSet] {
        &self.sets
    }

    /// Members of set `i` as source ids.
    pub fn members(&self, i: usize) -> Vec<SourceId> {
        self.sets[i].ones().map(|j| self.source_ids[j]).collect()
    }

    /// Size of the largest set.
    pub fn max_set_size(&self) -> usize {
        self.sets.iter().map(|s| s.count_ones(..)).max().unwrap_or(0)
    }
}

/// Cover sets at radius `epsilon`. Regrets are signed: a negative regret
/// always covers.
pub fn build_cover_sets(matrix: &RegretMatrix, epsilon: f64) -> Result<CoverSets, SetCoverError> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(SetCoverError::InvalidEpsilon(epsilon));
    }
    let n = matrix.n();
    let sets = (0..n)
        .map(|i| {
            let mut bits = FixedBitSet::with_capacity(n);
            for (j, r) in matrix.row(i).iter().enumerate() {
                if *r <= epsilon {
                    bits.insert(j);
                }
            }
            bits
        })
        .collect();
    Ok(CoverSets { epsilon, source_ids: matrix.source_ids().to_vec(), sets })
}

/// One greedy pick: the representative and the sources it newly covered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pick {
    pub representative: SourceId,
    pub covered: Vec<SourceId>,
}

/// Representatives in pick order, each with the disjoint set of sources
/// attributed to it, plus any sources left uncovered by filtering.
#[derive(Debug, Clone, PartialEq)]
pub struct Covering {
    epsilon: f64,
    source_ids: Vec<SourceId>,
    picks: Vec<Pick>,
    uncovered: Vec<SourceId>,
}

impl Covering {
    /// Reassembles a covering, checking that the picks and uncovered list
    /// partition `source_ids`.
    pub fn from_parts(
        epsilon: f64,
        source_ids: Vec<SourceId>,
        picks: Vec<Pick>,
        mut uncovered: Vec<SourceId>,
    ) -> Result<Self, SetCoverError> {
        let mut seen: BTreeMap<SourceId, usize> = source_ids.iter().map(|&id| (id, 0)).collect();
        if seen.len() != source_ids.len() {
            return Err(SetCoverError::Inconsistent("duplicate source id"));
        }
        for id in picks.iter().flat_map(|p| p.covered.iter()).chain(uncovered.iter()) {
            match seen.get_mut(id) {
                Some(count) => *count += 1,
                None => return Err(SetCoverError::Inconsistent("assignment mentions an unknown source")),
            }
        }
        if seen.values().any(|&c| c != 1) {
            return Err(SetCoverError::Inconsistent("every source must be attributed exactly once"));
        }
        if picks.iter().any(|p| !seen.contains_key(&p.representative)) {
            return Err(SetCoverError::Inconsistent("unknown representative"));
        }
        uncovered.sort_unstable();
        Ok(Self { epsilon, source_ids, picks, uncovered })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn source_ids(&self) -> &[SourceId] {
        &self.source_ids
    }

    pub fn picks(&self) -> &[Pick] {
        &self.picks
    }

    pub fn representatives(&self) -> Vec<SourceId> {
        self.picks.iter().map(|p| p.representative).collect()
    }

    /// Number of sources each representative newly covered when picked.
    pub fn residual_counts(&self) -> Vec<usize> {
        self.picks.iter().map(|p| p.covered.len()).collect()
    }

    pub fn assignment(&self) -> BTreeMap<SourceId, Vec<SourceId>> {
        self.picks.iter().map(|p| (p.representative, p.covered.clone())).collect()
    }

    pub fn uncovered(&self) -> &[SourceId] {
        &self.uncovered
    }

    pub fn len(&self) -> usize {
        self.picks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.picks.is_empty()
    }

    /// True when every source is attributed to a representative.
    pub fn is_complete(&self) -> bool {
        self.uncovered.is_empty()
    }
}

/// Greedy covering. Ties go to the lowest source id.
pub fn greedy_cover(cover_sets: &CoverSets) -> Covering {
    let n = cover_sets.n();
    let ids = &cover_sets.source_ids;
    let mut residual = cover_sets.sets.clone();
    let mut remaining = n;
    let mut picks = Vec::new();
    while remaining > 0 {
        let mut best: Option<(usize, usize)> = None;
        for (i, set) in residual.iter().enumerate() {
            let count = set.count_ones(..);
            let better = match best {
                None => count > 0,
                Some((b, bc)) => count > bc || (count == bc && ids[i] < ids[b]),
            };
            if better {
                best = Some((i, count));
            }
        }
        // self-membership guarantees some residual set is non-empty
        let (k, count) = best.expect("every uncovered source covers itself");
        let taken = residual[k].clone();
        for set in residual.iter_mut() {
            set.difference_with(&taken);
        }
        remaining -= count;
        let mut covered: Vec<SourceId> = taken.ones().map(|j| ids[j]).collect();
        covered.sort_unstable();
        picks.push(Pick { representative: ids[k], covered });
    }
    Covering { epsilon: cover_sets.epsilon, source_ids: ids.clone(), picks, uncovered: Vec::new() }
}

/// Keeps the representatives that cover at least `min_cover` sources; the
/// sources of the dropped ones become uncovered.
pub fn filter_representatives(covering: &Covering, min_cover: usize) -> Result<Covering, SetCoverError> {
    if min_cover == 0 {
        return Err(SetCoverError::ZeroMinCover);
    }
    let (kept, dropped): (Vec<Pick>, Vec<Pick>) =
        covering.picks.iter().cloned().partition(|p| p.covered.len() >= min_cover);
    let mut uncovered = covering.uncovered.clone();
    uncovered.extend(dropped.into_iter().flat_map(|p| p.covered));
    uncovered.sort_unstable();
    Ok(Covering { epsilon: covering.epsilon, source_ids: covering.source_ids.clone(), picks: kept, uncovered })
}

/// Whether every source has a representative with regret at most `epsilon`
/// towards it. Representatives are given by id.
pub fn is_valid_cover(matrix: &RegretMatrix, representatives: &[SourceId], epsilon: f64) -> bool {
    let rows: Vec<usize> = match representatives.iter().map(|&r| matrix.position_of(r)).collect() {
        Some(rows) => rows,
        None => return false,
    };
    (0..matrix.n()).all(|j| rows.iter().any(|&r| matrix.get(r, j) <= epsilon))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    /// Regrets between the five representatives at a 10% radius, in percent.
    pub(crate) fn published_matrix() -> RegretMatrix {
        let percent = [
            [0.0, 20.0, 12.0, 30.0, 30.0],
            [5.0, 0.0, 6.0, 25.0, 37.0],
            [21.0, 10.0, 0.0, 32.0, 33.0],
            [25.0, 26.0, 20.0, 0.0, 30.0],
            [19.0, 16.0, 29.0, 32.0, 0.0],
        ];
        let values = percent.iter().flatten().map(|p| p / 100.0).collect();
        RegretMatrix::from_regrets(vec![21, 22, 31, 60, 229], values, None).unwrap()
    }

    #[test]
    fn cover_sets_of_published_matrix() {
        let cs = build_cover_sets(&published_matrix(), 0.10).unwrap();
        assert_eq!(cs.members(0), vec![21]);
        assert_eq!(cs.members(1), vec![21, 22, 31]);
        assert_eq!(cs.members(2), vec![22, 31]);
        assert_eq!(cs.members(3), vec![60]);
        assert_eq!(cs.members(4), vec![229]);
    }

    #[test]
    fn greedy_on_published_matrix() {
        let c = greedy_cover(&build_cover_sets(&published_matrix(), 0.10).unwrap());
        assert_eq!(c.representatives(), vec![22, 60, 229]);
        assert_eq!(c.picks()[0].covered, vec![21, 22, 31]);
        assert_eq!(c.residual_counts(), vec![3, 1, 1]);
        assert!(c.is_complete());
        assert!(is_valid_cover(&published_matrix(), &c.representatives(), 0.10));
    }

    #[test]
    fn wide_radius_picks_lowest_id() {
        let c = greedy_cover(&build_cover_sets(&published_matrix(), 0.40).unwrap());
        assert_eq!(c.representatives(), vec![21]);
        assert_eq!(c.picks()[0].covered.len(), 5);
    }

    #[test]
    fn zero_radius_with_positive_regrets_gives_singletons() {
        let m = published_matrix();
        let cs = build_cover_sets(&m, 0.0).unwrap();
        for i in 0..5 {
            assert_eq!(cs.members(i), vec![m.source_ids()[i]]);
        }
        assert_eq!(greedy_cover(&cs).len(), 5);
    }

    #[test]
    fn negative_epsilon_rejected() {
        assert_eq!(build_cover_sets(&published_matrix(), -0.01), Err(SetCoverError::InvalidEpsilon(-0.01)));
    }

    #[test]
    fn negative_regret_covers() {
        let m = RegretMatrix::from_regrets(vec![0, 1], vec![0.0, -0.02, 0.5, 0.0], None).unwrap();
        let c = greedy_cover(&build_cover_sets(&m, 0.0).unwrap());
        assert_eq!(c.representatives(), vec![0]);
    }

    #[test]
    fn filter_examples() {
        let c = greedy_cover(&build_cover_sets(&published_matrix(), 0.10).unwrap());
        assert_eq!(filter_representatives(&c, 1).unwrap(), c);
        let f = filter_representatives(&c, 2).unwrap();
        assert_eq!(f.representatives(), vec![22]);
        assert_eq!(f.uncovered(), &[60, 229]);
        let none = filter_representatives(&c, 6).unwrap();
        assert!(none.is_empty());
        assert_eq!(none.uncovered(), &[21, 22, 31, 60, 229]);
        assert_eq!(filter_representatives(&c, 0), Err(SetCoverError::ZeroMinCover));
    }

    #[test]
    fn filter_keeps_large_clusters() {
        // cluster sizes 159, 69, 8, 4, 3 over 243 sources
        let sizes = [159usize, 69, 8, 4, 3];
        let mut next = 0u32;
        let picks: Vec<Pick> = sizes
            .iter()
            .map(|&s| {
                let covered: Vec<SourceId> = (next..next + s as u32).collect();
                next += s as u32;
                Pick { representative: covered[0], covered }
            })
            .collect();
        let c = Covering::from_parts(0.10, (0..243).collect(), picks, vec![]).unwrap();
        let f = filter_representatives(&c, 10).unwrap();
        assert_eq!(f.len(), 2);
        assert_eq!(f.uncovered().len(), 15);
    }

    #[test]
    fn from_parts_rejects_overlap() {
        let picks = vec![Pick { representative: 0, covered: vec![0, 1] }, Pick { representative: 1, covered: vec![1] }];
        assert!(Covering::from_parts(0.1, vec![0, 1], picks, vec![]).is_err());
    }
}
