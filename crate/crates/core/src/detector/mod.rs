//! Per-source cover/stego detectors and the regret between sources.
//!
//! Each source is a labeled set of feature vectors split into a train and a
//! test half. A ridge-regularised Fisher linear discriminant is trained on the
//! train half; its probability of error on a test half is the empirical
//! misclassification rate. The intrinsic difficulty of a source is the error
//! of its own detector on its own test half, and the regret of training on
//! `s` and evaluating on `t` is the excess of that cross error over the
//! intrinsic difficulty of `t`.

mod linalg;
mod regret;
mod simulator;

use alloc::vec::Vec;
use core::fmt;

pub use linalg::SquareMatrix;
pub use regret::{error_row, regret_matrix, validate_sources, RegretMatrix};
pub use simulator::{noise_profile, simulate_source, stego_shift, SimulatorConfig};

/// Identifier of a cover source. For simulated sources it is the pipeline index.
pub type SourceId = u32;

/// Default ridge strength of [`train_detector`].
pub const DEFAULT_RIDGE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DetectorError {
    #[error("source {source_id}: the {split} split is empty")]
    EmptySplit { source_id: SourceId, split: Split },
    #[error("source {source_id}: the {split} split is unbalanced ({covers} covers, {stegos} stegos)")]
    Unbalanced { source_id: SourceId, split: Split, covers: usize, stegos: usize },
    #[error("source {source_id}: the training split has no {missing} samples")]
    EmptyClass { source_id: SourceId, missing: Label },
    #[error("source {source_id}: sample has dimension {found}, expected {expected}")]
    SampleDimension { source_id: SourceId, expected: usize, found: usize },
    #[error("source {source_id}: feature values must be finite")]
    NonFinite { source_id: SourceId },
    #[error("feature dimension must be at least 1")]
    ZeroDimension,
    #[error(
        "sources {first} (dimension {first_dim}) and {other} (dimension {other_dim}) disagree on feature dimension"
    )]
    DimensionMismatch { first: SourceId, first_dim: usize, other: SourceId, other_dim: usize },
    #[error("cannot evaluate a detector on an empty test set")]
    EmptyTestSet,
    #[error("detector expects dimension {expected}, test sample has {found}")]
    DetectorDimension { expected: usize, found: usize },
    #[error("ridge strength must be positive and finite, got {0}")]
    InvalidRidge(f64),
    #[error("normal equations of source {0} are not positive definite")]
    Singular(SourceId),
    #[error("a regret matrix needs at least 2 sources, got {0}")]
    TooFewSources(usize),
    #[error("source id {0} appears more than once")]
    DuplicateSource(SourceId),
    #[error("regret matrix is malformed: {0}")]
    MalformedMatrix(&'static str),
    #[error("invalid simulator configuration: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Cover,
    Stego,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Cover => "cover",
            Label::Stego => "stego",
        }
    }

    pub fn parse(s: &str) -> Option<Label> {
        match s {
            "cover" => Some(Label::Cover),
            "stego" => Some(Label::Stego),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Split> {
        match s {
            "train" => Some(Split::Train),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A labeled feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: Label,
}

impl Sample {
    pub fn new(features: Vec<f64>, label: Label) -> Self {
        Self { features, label }
    }
}

/// The labeled samples of one source, split into train and test halves.
///
/// Construction checks that both splits are non-empty, that labels are
/// balanced to within one sample in each split, and that every vector has the
/// same finite dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceDataset {
    source_id: SourceId,
    dimension: usize,
    train: Vec<Sample>,
    test: Vec<Sample>,
}

impl SourceDataset {
    pub fn new(source_id: SourceId, train: Vec<Sample>, test: Vec<Sample>) -> Result<Self, DetectorError> {
        let dimension = train
            .first()
            .or_else(|| test.first())
            .map(|s| s.features.len())
            .ok_or(DetectorError::EmptySplit { source_id, split: Split::Train })?;
        if dimension == 0 {
            return Err(DetectorError::ZeroDimension);
        }
        for (split, samples) in [(Split::Train, &train), (Split::Test, &test)] {
            if samples.is_empty() {
                return Err(DetectorError::EmptySplit { source_id, split });
            }
            let mut covers = 0usize;
            for s in samples.iter() {
                if s.features.len() != dimension {
                    return Err(DetectorError::SampleDimension {
                        source_id,
                        expected: dimension,
                        found: s.features.len(),
                    });
                }
                if !s.features.iter().all(|x| x.is_finite()) {
                    return Err(DetectorError::NonFinite { source_id });
                }
                covers += usize::from(s.label == Label::Cover);
            }
            let stegos = samples.len() - covers;
            if covers.abs_diff(stegos) > 1 {
                return Err(DetectorError::Unbalanced { source_id, split, covers, stegos });
            }
        }
        Ok(Self { source_id, dimension, train, test })
    }

    pub fn source_id(&self) -> SourceId {
        self.source_id
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn train(&self) -> &[Sample] {
        &self.train
    }

    pub fn test(&self) -> &[Sample] {
        &self.test
    }

    /// Same samples under another id.
    pub fn with_source_id(mut self, source_id: SourceId) -> Self {
        self.source_id = source_id;
        self
    }
}

/// `score(x) = weights . x + bias`; positive scores are called stego.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearDetector {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub trained_on: SourceId,
}

impl LinearDetector {
    pub fn score(&self, features: &[f64]) -> f64 {
        dot(&self.weights, features) + self.bias
    }

    pub fn classify(&self, features: &[f64]) -> Label {
        if self.score(features) > 0.0 {
            Label::Stego
        } else {
            Label::Cover
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Class means and pooled within-class covariance of the training split.
///
/// The pooled covariance is the summed within-class scatter divided by
/// `n - 2` (or by 1 when there are only two samples).
pub fn class_statistics(samples: &[Sample], dimension: usize) -> (Vec<f64>, Vec<f64>, SquareMatrix) {
    let mut mean_cover = alloc::vec![0.0; dimension];
    let mut mean_stego = alloc::vec![0.0; dimension];
    let (mut n_cover, mut n_stego) = (0usize, 0usize);
    for s in samples {
        let (mean, n) = match s.label {
            Label::Cover => (&mut mean_cover, &mut n_cover),
            Label::Stego => (&mut mean_stego, &mut n_stego),
        };
        mean.iter_mut().zip(&s.features).for_each(|(m, x)| *m += x);
        *n += 1;
    }
    mean_cover.iter_mut().for_each(|m| *m /= n_cover.max(1) as f64);
    mean_stego.iter_mut().for_each(|m| *m /= n_stego.max(1) as f64);

    let mut scatter = SquareMatrix::zeros(dimension);
    let mut centered = alloc::vec![0.0; dimension];
    for s in samples {
        let mean = match s.label {
            Label::Cover => &mean_cover,
            Label::Stego => &mean_stego,
        };
        for ((c, x), m) in centered.iter_mut().zip(&s.features).zip(mean) {
            *c = x - m;
        }
        scatter.add_outer_lower(&centered, 1.0);
    }
    scatter.mirror_lower();
    let dof = (n_cover + n_stego).saturating_sub(2).max(1);
    scatter.scale(1.0 / dof as f64);
    (mean_cover, mean_stego, scatter)
}

/// Trains a ridge-regularised Fisher linear discriminant on the train split.
///
/// `weights = (pooled + ridge * I)^-1 (mean_stego - mean_cover)` and the bias
/// puts the decision threshold at the midpoint of the projected class means.
pub fn train_detector(dataset: &SourceDataset, ridge: f64) -> Result<LinearDetector, DetectorError> {
    if !(ridge > 0.0 && ridge.is_finite()) {
        return Err(DetectorError::InvalidRidge(ridge));
    }
    let source_id = dataset.source_id;
    for label in [Label::Cover, Label::Stego] {
        if !dataset.train.iter().any(|s| s.label == label) {
            return Err(DetectorError::EmptyClass { source_id, missing: label });
        }
    }
    let (mean_cover, mean_stego, mut system) = class_statistics(&dataset.train, dataset.dimension);
    system.add_diagonal(ridge);
    let diff: Vec<f64> = mean_stego.iter().zip(&mean_cover).map(|(s, c)| s - c).collect();
    let weights = system.cholesky_solve(&diff).ok_or(DetectorError::Singular(source_id))?;
    let midpoint = 0.5 * (dot(&weights, &mean_cover) + dot(&weights, &mean_stego));
    Ok(LinearDetector { weights, bias: -midpoint, trained_on: source_id })
}

/// Fraction of `test` the detector misclassifies.
pub fn probability_of_error(detector: &LinearDetector, test: &[Sample]) -> Result<f64, DetectorError> {
    if test.is_empty() {
        return Err(DetectorError::EmptyTestSet);
    }
    let mut errors = 0usize;
    for s in test {
        if s.features.len() != detector.weights.len() {
            return Err(DetectorError::DetectorDimension { expected: detector.weights.len(), found: s.features.len() });
        }
        errors += usize::from(detector.classify(&s.features) != s.label);
    }
    Ok(errors as f64 / test.len() as f64)
}
