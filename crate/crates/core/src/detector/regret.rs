use alloc::vec::Vec;

use super::{probability_of_error, train_detector, DetectorError, LinearDetector, SourceDataset, SourceId};

/// Pairwise regrets between `n` sources, rows indexed by the training source
/// and columns by the evaluated source.
///
/// The diagonal is exactly zero. `intrinsic` holds the per-source intrinsic
/// difficulty when it is known; matrices read from external files may not
/// carry it.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretMatrix {
    source_ids: Vec<SourceId>,
    intrinsic: Option<Vec<f64>>,
    regret: Vec<f64>,
}

impl RegretMatrix {
    /// Builds the matrix from a row-major `n x n` table of probabilities of
    /// error (train row, eval column).
    pub fn from_error_matrix(source_ids: Vec<SourceId>, errors: &[f64]) -> Result<Self, DetectorError> {
        let n = source_ids.len();
        check_ids(&source_ids)?;
        if errors.len() != n * n {
            return Err(DetectorError::MalformedMatrix("error table is not n x n"));
        }
        if !errors.iter().all(|p| (0.0..=1.0).contains(p)) {
            return Err(DetectorError::MalformedMatrix("probabilities of error must lie in [0, 1]"));
        }
        let intrinsic: Vec<f64> = (0..n).map(|t| errors[t * n + t]).collect();
        let regret = (0..n * n)
            .map(|k| {
                let (s, t) = (k / n, k % n);
                if s == t {
                    0.0
                } else {
                    errors[k] - intrinsic[t]
                }
            })
            .collect();
        Ok(Self { source_ids, intrinsic: Some(intrinsic), regret })
    }

    /// Wraps an existing regret table. The diagonal must be exactly zero.
    pub fn from_regrets(
        source_ids: Vec<SourceId>,
        regret: Vec<f64>,
        intrinsic: Option<Vec<f64>>,
    ) -> Result<Self, DetectorError> {
        let n = source_ids.len();
        check_ids(&source_ids)?;
        if regret.len() != n * n {
            return Err(DetectorError::MalformedMatrix("regret table is not n x n"));
        }
        if !regret.iter().all(|r| r.is_finite()) {
            return Err(DetectorError::MalformedMatrix("regrets must be finite"));
        }
        if (0..n).any(|i| regret[i * n + i] != 0.0) {
            return Err(DetectorError::MalformedMatrix("diagonal regrets must be zero"));
        }
        if let Some(intr) = &intrinsic {
            if intr.len() != n {
                return Err(DetectorError::MalformedMatrix("intrinsic difficulty list has the wrong length"));
            }
            if !intr.iter().all(|p| (0.0..=1.0).contains(p)) {
                return Err(DetectorError::MalformedMatrix("intrinsic difficulties must lie in [0, 1]"));
            }
        }
        Ok(Self { source_ids, intrinsic, regret })
    }

    pub fn n(&self) -> usize {
        self.source_ids.len()
    }

    pub fn source_ids(&self) -> &[SourceId] {
        &self.source_ids
    }

    pub fn intrinsic(&self) -> Option<&[f64]> {
        self.intrinsic.as_deref()
    }

    /// Regret of training on position `train` and evaluating on `eval`.
    pub fn get(&self, train: usize, eval: usize) -> f64 {
        self.regret[train * self.n() + eval]
    }

    pub fn row(&self, train: usize) -> &[f64] {
        let n = self.n();
        &self.regret[train * n..(train + 1) * n]
    }

    pub fn values(&self) -> &[f64] {
        &self.regret
    }

    pub fn position_of(&self, id: SourceId) -> Option<usize> {
        self.source_ids.iter().position(|&s| s == id)
    }

    /// Cross probabilities of error (`regret + intrinsic`), when intrinsic
    /// difficulties are known.
    pub fn error_matrix(&self) -> Option<Vec<f64>> {
        let intr = self.intrinsic.as_ref()?;
        let n = self.n();
        Some((0..n * n).map(|k| self.regret[k] + intr[k % n]).collect())
    }

    pub fn max_regret(&self) -> f64 {
        self.regret.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

fn check_ids(ids: &[SourceId]) -> Result<(), DetectorError> {
    for (i, id) in ids.iter().enumerate() {
        if ids[..i].contains(id) {
            return Err(DetectorError::DuplicateSource(*id));
        }
    }
    Ok(())
}

fn check_sources(datasets: &[SourceDataset]) -> Result<(), DetectorError> {
    if datasets.len() < 2 {
        return Err(DetectorError::TooFewSources(datasets.len()));
    }
    let first = &datasets[0];
    if let Some(other) = datasets.iter().find(|d| d.dimension() != first.dimension()) {
        return Err(DetectorError::DimensionMismatch {
            first: first.source_id(),
            first_dim: first.dimension(),
            other: other.source_id(),
            other_dim: other.dimension(),
        });
    }
    let ids: Vec<SourceId> = datasets.iter().map(|d| d.source_id()).collect();
    check_ids(&ids)
}

/// Probabilities of error of `detector` on the test split of every source.
pub fn error_row(detector: &LinearDetector, datasets: &[SourceDataset]) -> Result<Vec<f64>, DetectorError> {
    datasets.iter().map(|d| probability_of_error(detector, d.test())).collect()
}

/// Trains one detector per source and scores each on every test split.
pub fn regret_matrix(datasets: &[SourceDataset], ridge: f64) -> Result<RegretMatrix, DetectorError> {
    check_sources(datasets)?;
    let detectors = datasets.iter().map(|d| train_detector(d, ridge)).collect::<Result<Vec<_>, _>>()?;
    let mut errors = Vec::with_capacity(datasets.len() * datasets.len());
    for det in &detectors {
        errors.extend(error_row(det, datasets)?);
    }
    RegretMatrix::from_error_matrix(datasets.iter().map(|d| d.source_id()).collect(), &errors)
}

/// Validation shared with parallel drivers that assemble the error table
/// themselves.
pub fn validate_sources(datasets: &[SourceDataset]) -> Result<(), DetectorError> {
    check_sources(datasets)
}
