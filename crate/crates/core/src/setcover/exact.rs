use alloc::vec::Vec;

use fixedbitset::FixedBitSet;

use super::{greedy_cover, CoverSets, Covering, SetCoverError};
use crate::detector::SourceId;

/// Limits of the branch-and-bound search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactOptions {
    /// Maximum number of search nodes before giving up.
    pub node_budget: u64,
    /// Largest instance accepted unless `override_limit` is set.
    pub size_limit: usize,
    pub override_limit: bool,
}

impl Default for ExactOptions {
    fn default() -> Self {
        Self { node_budget: 2_000_000, size_limit: 30, override_limit: false }
    }
}

/// Covering sizes: greedy, a certified lower bound and, when the exact search
/// finished, the minimum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoveringBounds {
    pub greedy_size: usize,
    pub lower_bound: usize,
    /// Minimum covering size; `None` unless the exact search ran to completion.
    pub exact_size: Option<usize>,
    /// Smallest covering found by the exact search (the greedy size when the
    /// search did not run).
    pub best_found: usize,
    pub exact_complete: bool,
    /// Representatives of the smallest covering found, by id.
    pub best_representatives: Vec<SourceId>,
    pub nodes: u64,
}

impl CoveringBounds {
    /// Bounds for an instance on which the exact search is not run. The
    /// minimum is still known when the lower bound meets the greedy size.
    pub fn without_exact(cover_sets: &CoverSets, greedy: &Covering) -> Self {
        let lower = lower_bound(cover_sets, greedy);
        let certified = lower == greedy.len();
        Self {
            greedy_size: greedy.len(),
            lower_bound: lower,
            exact_size: certified.then_some(lower),
            best_found: greedy.len(),
            exact_complete: certified,
            best_representatives: greedy.representatives(),
            nodes: 0,
        }
    }
}

/// `H_d = 1 + 1/2 + ... + 1/d`.
pub fn harmonic(d: usize) -> f64 {
    (1..=d).map(|k| 1.0 / k as f64).sum()
}

/// Lower bound on the minimum covering size: the larger of the greedy size
/// divided by `H_d` (rounded up) and the size of a greedily built set of
/// sources no two of which share a cover set.
pub fn lower_bound(cover_sets: &CoverSets, greedy: &Covering) -> usize {
    let n = cover_sets.n();
    if n == 0 {
        return 0;
    }
    let d = cover_sets.max_set_size();
    let ratio = greedy.len() as f64 / harmonic(d);
    // guard against the quotient of an exact multiple rounding up
    let from_ratio = libm::ceil(ratio - 1e-9) as usize;

    // coverers[j] = sets containing j
    let mut coverers = alloc::vec![FixedBitSet::with_capacity(n); n];
    for (i, set) in cover_sets.sets().iter().enumerate() {
        for j in set.ones() {
            coverers[j].insert(i);
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&j| (coverers[j].count_ones(..), cover_sets.source_ids()[j]));
    let mut blocked = FixedBitSet::with_capacity(n);
    let mut independent = 0usize;
    for j in order {
        if coverers[j].is_disjoint(&blocked) {
            blocked.union_with(&coverers[j]);
            independent += 1;
        }
    }
    from_ratio.max(independent)
}

struct Search<'a> {
    sets: &'a [FixedBitSet],
    coverers: Vec<Vec<usize>>,
    best: Vec<usize>,
    nodes: u64,
    budget: u64,
    exhausted: bool,
}

impl Search<'_> {
    fn run(&mut self, uncovered: &FixedBitSet, chosen: &mut Vec<usize>) {
        if self.exhausted {
            return;
        }
        if self.nodes >= self.budget {
            self.exhausted = true;
            return;
        }
        self.nodes += 1;
        let remaining = uncovered.count_ones(..);
        if remaining == 0 {
            if chosen.len() < self.best.len() {
                self.best = chosen.clone();
            }
            return;
        }
        if chosen.len() + 1 >= self.best.len() {
            return;
        }
        let widest = self.sets.iter().map(|s| s.intersection_count(uncovered)).max().unwrap_or(0);
        if widest == 0 || chosen.len() + remaining.div_ceil(widest) >= self.best.len() {
            return;
        }
        // branch on the uncovered source with the fewest coverers; one of them
        // must be in any covering
        let pivot = uncovered.ones().min_by_key(|&j| (self.coverers[j].len(), j)).expect("remaining > 0");
        let mut candidates: Vec<(usize, usize)> =
            self.coverers[pivot].iter().map(|&i| (i, self.sets[i].intersection_count(uncovered))).collect();
        candidates.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        for (i, _) in candidates {
            let mut next = uncovered.clone();
            next.difference_with(&self.sets[i]);
            chosen.push(i);
            self.run(&next, chosen);
            chosen.pop();
            if self.exhausted {
                return;
            }
        }
    }
}

/// Minimum covering by branch and bound, seeded with the greedy covering as
/// incumbent. If the node budget runs out the result is flagged incomplete
/// and `exact_size` is `None`.
pub fn exact_cover(cover_sets: &CoverSets, options: ExactOptions) -> Result<CoveringBounds, SetCoverError> {
    let n = cover_sets.n();
    if n > options.size_limit && !options.override_limit {
        return Err(SetCoverError::TooLarge { n, limit: options.size_limit });
    }
    let greedy = greedy_cover(cover_sets);
    let lower = lower_bound(cover_sets, &greedy);
    let ids = cover_sets.source_ids();
    let greedy_positions: Vec<usize> = greedy
        .representatives()
        .iter()
        .map(|r| ids.iter().position(|x| x == r).expect("representative is a source"))
        .collect();

    let mut coverers = alloc::vec![Vec::new(); n];
    for (i, set) in cover_sets.sets().iter().enumerate() {
        for j in set.ones() {
            coverers[j].push(i);
        }
    }
    let mut search = Search {
        sets: cover_sets.sets(),
        coverers,
        best: greedy_positions,
        nodes: 0,
        budget: options.node_budget,
        exhausted: false,
    };
    // nothing to search when greedy already meets the lower bound
    if search.best.len() > lower {
        let mut all = FixedBitSet::with_capacity(n);
        all.insert_range(..);
        search.run(&all, &mut Vec::new());
    }
    let complete = !search.exhausted;
    let mut best_representatives: Vec<SourceId> = search.best.iter().map(|&i| ids[i]).collect();
    best_representatives.sort_unstable();
    Ok(CoveringBounds {
        greedy_size: greedy.len(),
        lower_bound: lower,
        exact_size: complete.then_some(search.best.len()),
        best_found: search.best.len(),
        exact_complete: complete,
        best_representatives,
        nodes: search.nodes,
    })
}
