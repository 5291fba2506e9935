//! Random forest over pipeline levels with entropy impurity, used to measure
//! how much each parameter separates the clusters (mean decrease impurity).
//!
//! Features are the five ordinal levels; a split sends `level <= threshold`
//! left, with thresholds 0.5 and 1.5.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::{AnalysisError, ClusterLabeling};
use crate::detector::SourceId;
use crate::grid::{Parameter, PipelineDirectory, PARAMETER_COUNT};

const THRESHOLDS: [u8; 2] = [0, 1];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForestConfig {
    pub trees: usize,
    /// `None` grows trees until leaves are pure or cannot be split.
    pub max_depth: Option<usize>,
    pub features_per_split: usize,
    pub min_samples_leaf: usize,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self { trees: 100, max_depth: None, features_per_split: 2, min_samples_leaf: 1, seed: 0 }
    }
}

impl ForestConfig {
    fn validate(&self) -> Result<(), AnalysisError> {
        if self.trees == 0 {
            return Err(AnalysisError::InvalidConfig("trees must be at least 1"));
        }
        if self.features_per_split == 0 || self.features_per_split > PARAMETER_COUNT {
            return Err(AnalysisError::InvalidConfig("features_per_split must be between 1 and 5"));
        }
        if self.min_samples_leaf == 0 {
            return Err(AnalysisError::InvalidConfig("min_samples_leaf must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf { class: usize },
    Split { feature: usize, threshold: u8, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn predict(&self, levels: &[u8; PARAMETER_COUNT]) -> usize {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { class } => return class,
                Node::Split { feature, threshold, left, right } => {
                    at = if levels[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }
}

/// Entropy in bits of a class histogram. Counts are sorted first so the value
/// does not depend on how classes are numbered.
fn entropy(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let mut sorted: Vec<usize> = counts.iter().copied().filter(|&c| c > 0).collect();
    sorted.sort_unstable();
    let n = total as f64;
    -sorted
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            p * libm::log2(p)
        })
        .sum::<f64>()
}

struct TreeBuilder<'a> {
    features: &'a [[u8; PARAMETER_COUNT]],
    classes: &'a [usize],
    n_classes: usize,
    config: &'a ForestConfig,
    root_weight: f64,
    importance: [f64; PARAMETER_COUNT],
    nodes: Vec<Node>,
}

impl TreeBuilder<'_> {
    fn histogram(&self, rows: &[usize]) -> Vec<usize> {
        let mut counts = alloc::vec![0usize; self.n_classes];
        rows.iter().for_each(|&r| counts[self.classes[r]] += 1);
        counts
    }

    fn majority(counts: &[usize]) -> usize {
        let mut best = 0;
        for (c, &n) in counts.iter().enumerate() {
            if n > counts[best] {
                best = c;
            }
        }
        best
    }

    fn build(&mut self, rows: Vec<usize>, depth: usize, rng: &mut ChaCha20Rng) -> usize {
        let id = self.nodes.len();
        let counts = self.histogram(&rows);
        self.nodes.push(Node::Leaf { class: Self::majority(&counts) });
        let impurity = entropy(&counts, rows.len());
        let depth_reached = self.config.max_depth.is_some_and(|d| depth >= d);
        if impurity <= 0.0 || depth_reached || rows.len() < 2 * self.config.min_samples_leaf {
            return id;
        }

        // draw features without replacement; constant ones do not count
        // towards the per-split budget
        let mut order: [usize; PARAMETER_COUNT] = core::array::from_fn(|i| i);
        for i in 0..PARAMETER_COUNT {
            let j = rng.random_range(i..PARAMETER_COUNT);
            order.swap(i, j);
        }
        let mut best: Option<(f64, usize, u8)> = None;
        let mut evaluated = 0;
        for &feature in &order {
            if evaluated == self.config.features_per_split {
                break;
            }
            let first = self.features[rows[0]][feature];
            if rows.iter().all(|&r| self.features[r][feature] == first) {
                continue;
            }
            evaluated += 1;
            for threshold in THRESHOLDS {
                let mut left = alloc::vec![0usize; self.n_classes];
                let mut n_left = 0;
                for &r in &rows {
                    if self.features[r][feature] <= threshold {
                        left[self.classes[r]] += 1;
                        n_left += 1;
                    }
                }
                let n_right = rows.len() - n_left;
                if n_left < self.config.min_samples_leaf || n_right < self.config.min_samples_leaf {
                    continue;
                }
                let right: Vec<usize> = counts.iter().zip(&left).map(|(a, b)| a - b).collect();
                let n = rows.len() as f64;
                let gain = impurity
                    - (n_left as f64 / n) * entropy(&left, n_left)
                    - (n_right as f64 / n) * entropy(&right, n_right);
                if best.is_none_or(|(g, _, _)| gain > g) {
                    best = Some((gain, feature, threshold));
                }
            }
        }
        let Some((gain, feature, threshold)) = best else {
            return id;
        };
        self.importance[feature] += rows.len() as f64 / self.root_weight * gain;
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.into_iter().partition(|&r| self.features[r][feature] <= threshold);
        let left = self.build(left_rows, depth + 1, rng);
        let right = self.build(right_rows, depth + 1, rng);
        self.nodes[id] = Node::Split { feature, threshold, left, right };
        id
    }
}

/// Bagged entropy trees over pipeline levels.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    trees: Vec<DecisionTree>,
    n_classes: usize,
    /// Unnormalised impurity decrease per feature, summed over trees in order.
    raw_importance: [f64; PARAMETER_COUNT],
}

impl RandomForest {
    /// Fits the forest. Tree `t` draws its bootstrap sample and feature
    /// subsets from ChaCha stream `t` of the generator seeded with
    /// `config.seed`.
    pub fn fit(
        features: &[[u8; PARAMETER_COUNT]],
        classes: &[usize],
        n_classes: usize,
        config: &ForestConfig,
    ) -> Result<Self, AnalysisError> {
        config.validate()?;
        let n = features.len();
        if n == 0 || classes.len() != n {
            return Err(AnalysisError::EmptyLabeling);
        }
        let mut raw_importance = [0.0; PARAMETER_COUNT];
        let mut trees = Vec::with_capacity(config.trees);
        for t in 0..config.trees {
            let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
            rng.set_stream(t as u64);
            let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let mut builder = TreeBuilder {
                features,
                classes,
                n_classes,
                config,
                root_weight: n as f64,
                importance: [0.0; PARAMETER_COUNT],
                nodes: Vec::new(),
            };
            builder.build(rows, 0, &mut rng);
            for (acc, v) in raw_importance.iter_mut().zip(builder.importance) {
                *acc += v;
            }
            trees.push(DecisionTree { nodes: builder.nodes });
        }
        Ok(Self { trees, n_classes, raw_importance })
    }

    /// Majority vote over trees; ties go to the lowest class.
    pub fn predict(&self, levels: &[u8; PARAMETER_COUNT]) -> usize {
        let mut votes = alloc::vec![0usize; self.n_classes];
        self.trees.iter().for_each(|t| votes[t.predict(levels)] += 1);
        TreeBuilder::majority(&votes)
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn raw_importance(&self) -> [f64; PARAMETER_COUNT] {
        self.raw_importance
    }
}

/// Mean decrease impurity per parameter, normalised to sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceReport {
    pub scores: [f64; PARAMETER_COUNT],
    pub config: ForestConfig,
    pub classes: usize,
    pub samples: usize,
}

impl ImportanceReport {
    pub fn score(&self, parameter: Parameter) -> f64 {
        self.scores[parameter.position()]
    }

    /// Parameters by decreasing score; equal scores keep grid order.
    pub fn ranking(&self) -> Vec<Parameter> {
        let mut params = Parameter::ALL.to_vec();
        params.sort_by(|a, b| self.score(*b).total_cmp(&self.score(*a)));
        params
    }
}

/// Trains a forest to predict each source's cluster from its pipeline levels
/// and reports the mean decrease impurity of every parameter.
pub fn mdi_importance(
    labeling: &ClusterLabeling,
    directory: &PipelineDirectory,
    config: &ForestConfig,
) -> Result<ImportanceReport, AnalysisError> {
    if labeling.is_empty() {
        return Err(AnalysisError::EmptyLabeling);
    }
    let class_of: BTreeMap<SourceId, usize> =
        labeling.cluster_sizes().keys().enumerate().map(|(i, r)| (*r, i)).collect();
    if class_of.len() < 2 {
        return Err(AnalysisError::SingleCluster(class_of.len()));
    }
    let mut features = Vec::with_capacity(labeling.len());
    let mut classes = Vec::with_capacity(labeling.len());
    for (&source, rep) in labeling.labels() {
        let desc = directory.get(source as usize).ok_or(AnalysisError::NotInDirectory(source))?;
        features.push(desc.levels());
        classes.push(class_of[rep]);
    }
    let forest = RandomForest::fit(&features, &classes, class_of.len(), config)?;
    let raw = forest.raw_importance();
    let total: f64 = raw.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(AnalysisError::NoInformativeSplit);
    }
    Ok(ImportanceReport {
        scores: raw.map(|v| v / total),
        config: *config,
        classes: class_of.len(),
        samples: features.len(),
    })
}
