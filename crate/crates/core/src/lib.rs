//! Selection of representative cover sources.
//!
//! A cover source is one point of a 3^5 grid of image-processing pipelines.
//! For every pair of sources a linear detector trained on one is scored on the
//! other; the excess error over the evaluated source's own detector is the
//! regret. Given a regret budget `epsilon`, [`setcover`] extracts a small set
//! of representatives such that every source has a representative whose
//! regret towards it is at most `epsilon`, and [`analysis`] explains the
//! resulting clusters in terms of pipeline parameters.
//!
//! The crate is `no_std` and only needs an allocator. File formats, the
//! command-line tool and parallel drivers live in the `covsel` crate.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod detector;
pub mod grid;
pub mod setcover;

pub use analysis::{
    cluster_sources, mdi_importance, pareto_report, AnalysisError, AssignmentMode, ClusterLabeling, ForestConfig,
    ImportanceReport, ParetoReport,
};
pub use detector::{
    probability_of_error, regret_matrix, simulate_source, train_detector, DetectorError, Label, LinearDetector,
    RegretMatrix, Sample, SimulatorConfig, SourceDataset, SourceId,
};
pub use grid::{decode, encode, enumerate_grid, GridError, Parameter, PipelineDescriptor, PipelineDirectory};
pub use setcover::{
    build_cover_sets, exact_cover, filter_representatives, greedy_cover, lower_bound, random_baseline, CoverSets,
    Covering, CoveringBounds, ExactOptions, SetCoverError,
};
