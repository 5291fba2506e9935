//! Cluster labels (CSV), Pareto, importance, level histogram and baseline
//! reports (JSON).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use covsel_core::analysis::LevelHistogram;
use covsel_core::grid::Parameter;
use covsel_core::{AssignmentMode, ClusterLabeling, ImportanceReport, ParetoReport, SourceId};
use serde::{Deserialize, Serialize};

use super::{csv_error, write_string};
use crate::error::{Error, Result};

pub fn clusters_to_csv(labeling: &ClusterLabeling) -> String {
    let mut out = String::from("source_id,representative_id,mode\n");
    for (source, rep) in labeling.labels() {
        writeln!(out, "{source},{rep},{}", labeling.mode()).unwrap();
    }
    out
}

pub fn write_clusters(path: &Path, labeling: &ClusterLabeling) -> Result<()> {
    write_string(path, &clusters_to_csv(labeling))
}

pub fn read_clusters(path: &Path) -> Result<ClusterLabeling> {
    let mut reader = csv::ReaderBuilder::new().from_path(path).map_err(|e| csv_error(path, e))?;
    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.iter().ne(["source_id", "representative_id", "mode"]) {
        return Err(Error::parse(path, 1, "header must be `source_id,representative_id,mode`"));
    }
    let mut labels = BTreeMap::new();
    let mut mode = None;
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let id = |k: usize| -> Result<SourceId> {
            record[k]
                .trim()
                .parse()
                .map_err(|_| Error::parse(path, line, format!("`{}` is not a source id", &record[k])))
        };
        let (source, rep) = (id(0)?, id(1)?);
        let row_mode = AssignmentMode::parse(record[2].trim()).map_err(|e| Error::parse(path, line, e.to_string()))?;
        if mode.is_some_and(|m| m != row_mode) {
            return Err(Error::parse(path, line, "mixed assignment modes"));
        }
        mode = Some(row_mode);
        if labels.insert(source, rep).is_some() {
            return Err(Error::parse(path, line, format!("source {source} labeled twice")));
        }
    }
    Ok(ClusterLabeling::from_labels(mode.unwrap_or_default(), labels))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MdiScores {
    pub demosaicking: f64,
    pub denoising: f64,
    pub sharpen_micro: f64,
    pub downsampling: f64,
    pub post_resize_sharpening: f64,
}

impl MdiScores {
    pub fn get(&self, p: Parameter) -> f64 {
        self.as_array()[p.position()]
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.demosaicking, self.denoising, self.sharpen_micro, self.downsampling, self.post_resize_sharpening]
    }

    /// Parameters by decreasing score.
    pub fn ranking(&self) -> Vec<Parameter> {
        let mut params = Parameter::ALL.to_vec();
        params.sort_by(|a, b| self.get(*b).total_cmp(&self.get(*a)));
        params
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestRecord {
    pub criterion: String,
    pub trees: usize,
    pub max_depth: Option<usize>,
    pub features_per_split: usize,
    pub min_samples_leaf: usize,
    pub bootstrap: bool,
    pub classes: usize,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceFile {
    pub mdi: MdiScores,
    pub config: ForestRecord,
    pub seed: u64,
}

impl From<&ImportanceReport> for ImportanceFile {
    fn from(r: &ImportanceReport) -> Self {
        let s = r.scores;
        Self {
            mdi: MdiScores {
                demosaicking: s[0],
                denoising: s[1],
                sharpen_micro: s[2],
                downsampling: s[3],
                post_resize_sharpening: s[4],
            },
            config: ForestRecord {
                criterion: "entropy".into(),
                trees: r.config.trees,
                max_depth: r.config.max_depth,
                features_per_split: r.config.features_per_split,
                min_samples_leaf: r.config.min_samples_leaf,
                bootstrap: true,
                classes: r.classes,
                samples: r.samples,
            },
            seed: r.config.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoCluster {
    pub representative: SourceId,
    pub size: usize,
    pub cumulative_share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoFile {
    pub total: usize,
    pub top2_share: f64,
    pub clusters: Vec<ParetoCluster>,
}

impl From<&ParetoReport> for ParetoFile {
    fn from(r: &ParetoReport) -> Self {
        Self {
            total: r.total,
            top2_share: r.top_share(2),
            clusters: r
                .representatives
                .iter()
                .zip(&r.sizes)
                .zip(&r.shares)
                .map(|((rep, size), share)| ParetoCluster {
                    representative: *rep,
                    size: *size,
                    cumulative_share: *share,
                })
                .collect(),
        }
    }
}

/// Per cluster and parameter, member counts at levels 0, 1 and 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelsFile {
    pub clusters: BTreeMap<String, BTreeMap<String, [usize; 3]>>,
}

impl LevelsFile {
    pub fn new(histograms: &BTreeMap<SourceId, LevelHistogram>) -> Self {
        let clusters = histograms
            .iter()
            .map(|(rep, h)| {
                let per_param = Parameter::ALL.iter().map(|p| (p.key().to_string(), h[p.position()])).collect();
                (rep.to_string(), per_param)
            })
            .collect();
        Self { clusters }
    }
}

/// Random subsets drawn as baselines for a filtered covering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineFile {
    pub seed: u64,
    pub k: usize,
    pub variants: Vec<Vec<SourceId>>,
}
