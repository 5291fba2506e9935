//! Clusters induced by a covering and what explains them.

mod forest;

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use crate::detector::{RegretMatrix, SourceId};
use crate::grid::{PipelineDirectory, LEVELS, PARAMETER_COUNT};
use crate::setcover::Covering;

pub use forest::{mdi_importance, DecisionTree, ForestConfig, ImportanceReport, RandomForest};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("covering leaves {0} source(s) uncovered; clusters need a complete covering")]
    IncompleteCovering(usize),
    #[error("covering has no representatives")]
    EmptyCovering,
    #[error("source {0} is not part of the regret matrix")]
    UnknownSource(SourceId),
    #[error("source {0} has no pipeline in the directory")]
    NotInDirectory(SourceId),
    #[error("labeling is empty")]
    EmptyLabeling,
    #[error("importance needs at least two clusters, found {0}")]
    SingleCluster(usize),
    #[error("no split of the forest reduced impurity")]
    NoInformativeSplit,
    #[error("invalid forest configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("unknown assignment mode `{0}`")]
    UnknownMode(alloc::string::String),
}

/// How sources covered by several representatives are labeled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AssignmentMode {
    /// The representative that covered the source first in greedy order.
    #[default]
    GreedyOrder,
    /// The representative with the smallest regret towards the source.
    MinRegret,
}

impl AssignmentMode {
    pub fn as_str(self) -> &'static str {
        match self {
            AssignmentMode::GreedyOrder => "greedy-order",
            AssignmentMode::MinRegret => "min-regret",
        }
    }

    pub fn parse(s: &str) -> Result<Self, AnalysisError> {
        match s {
            "greedy-order" => Ok(AssignmentMode::GreedyOrder),
            "min-regret" => Ok(AssignmentMode::MinRegret),
            other => Err(AnalysisError::UnknownMode(other.into())),
        }
    }
}

impl fmt::Display for AssignmentMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Source -> representative labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterLabeling {
    mode: AssignmentMode,
    labels: BTreeMap<SourceId, SourceId>,
    cluster_sizes: BTreeMap<SourceId, usize>,
}

impl ClusterLabeling {
    pub fn from_labels(mode: AssignmentMode, labels: BTreeMap<SourceId, SourceId>) -> Self {
        let mut cluster_sizes = BTreeMap::new();
        for rep in labels.values() {
            *cluster_sizes.entry(*rep).or_insert(0) += 1;
        }
        Self { mode, labels, cluster_sizes }
    }

    pub fn mode(&self) -> AssignmentMode {
        self.mode
    }

    pub fn labels(&self) -> &BTreeMap<SourceId, SourceId> {
        &self.labels
    }

    pub fn cluster_sizes(&self) -> &BTreeMap<SourceId, usize> {
        &self.cluster_sizes
    }

    pub fn label_of(&self, source: SourceId) -> Option<SourceId> {
        self.labels.get(&source).copied()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Labels every source with a representative of `covering`.
pub fn cluster_sources(
    covering: &Covering,
    matrix: &RegretMatrix,
    mode: AssignmentMode,
) -> Result<ClusterLabeling, AnalysisError> {
    if !covering.is_complete() {
        return Err(AnalysisError::IncompleteCovering(covering.uncovered().len()));
    }
    if covering.is_empty() {
        return Err(AnalysisError::EmptyCovering);
    }
    let labels = match mode {
        AssignmentMode::GreedyOrder => {
            covering.picks().iter().flat_map(|p| p.covered.iter().map(move |&s| (s, p.representative))).collect()
        }
        AssignmentMode::MinRegret => {
            let mut reps: Vec<(SourceId, usize)> = covering
                .representatives()
                .into_iter()
                .map(|r| matrix.position_of(r).map(|pos| (r, pos)).ok_or(AnalysisError::UnknownSource(r)))
                .collect::<Result<_, _>>()?;
            reps.sort_unstable();
            let mut labels = BTreeMap::new();
            for &source in covering.source_ids() {
                let col = matrix.position_of(source).ok_or(AnalysisError::UnknownSource(source))?;
                let mut best = reps[0];
                for &rep in &reps[1..] {
                    if matrix.get(rep.1, col) < matrix.get(best.1, col) {
                        best = rep;
                    }
                }
                labels.insert(source, best.0);
            }
            labels
        }
    };
    Ok(ClusterLabeling::from_labels(mode, labels))
}

/// Cluster sizes in decreasing order with their cumulative share of sources.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoReport {
    pub representatives: Vec<SourceId>,
    pub sizes: Vec<usize>,
    pub shares: Vec<f64>,
    pub total: usize,
}

impl ParetoReport {
    /// Share of sources held by the `k` largest clusters.
    pub fn top_share(&self, k: usize) -> f64 {
        match k {
            0 => 0.0,
            k => self.shares[k.min(self.shares.len()) - 1],
        }
    }

    /// Builds the report from `(representative, size)` pairs. Equal sizes are
    /// ordered by representative id.
    pub fn from_sizes(clusters: &[(SourceId, usize)]) -> Result<Self, AnalysisError> {
        let total: usize = clusters.iter().map(|c| c.1).sum();
        if total == 0 {
            return Err(AnalysisError::EmptyLabeling);
        }
        let mut sorted = clusters.to_vec();
        sorted.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let mut running = 0usize;
        let shares = sorted
            .iter()
            .map(|c| {
                running += c.1;
                running as f64 / total as f64
            })
            .collect();
        Ok(Self {
            representatives: sorted.iter().map(|c| c.0).collect(),
            sizes: sorted.iter().map(|c| c.1).collect(),
            shares,
            total,
        })
    }
}

pub fn pareto_report(labeling: &ClusterLabeling) -> Result<ParetoReport, AnalysisError> {
    if labeling.is_empty() {
        return Err(AnalysisError::EmptyLabeling);
    }
    let clusters: Vec<(SourceId, usize)> = labeling.cluster_sizes.iter().map(|(r, s)| (*r, *s)).collect();
    ParetoReport::from_sizes(&clusters)
}

/// Per cluster, how many members use each level of each parameter.
pub type LevelHistogram = [[usize; LEVELS as usize]; PARAMETER_COUNT];

/// Level histograms of every cluster, the textual counterpart of drawing the
/// most frequent pipeline links of a cluster.
pub fn level_histograms(
    labeling: &ClusterLabeling,
    directory: &PipelineDirectory,
) -> Result<BTreeMap<SourceId, LevelHistogram>, AnalysisError> {
    let mut out: BTreeMap<SourceId, LevelHistogram> = BTreeMap::new();
    for (&source, &rep) in &labeling.labels {
        let desc = directory.get(source as usize).ok_or(AnalysisError::NotInDirectory(source))?;
        let hist = out.entry(rep).or_insert([[0; LEVELS as usize]; PARAMETER_COUNT]);
        for (p, level) in desc.levels().iter().enumerate() {
            hist[p][*level as usize] += 1;
        }
    }
    Ok(out)
}
