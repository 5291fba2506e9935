//! Multi-threaded variants of the simulation and regret stages. Results are
//! identical to the serial versions whatever the thread schedule.

use covsel_core::detector::{error_row, train_detector, validate_sources};
use covsel_core::{simulate_source, PipelineDescriptor, RegretMatrix, SimulatorConfig, SourceDataset};
use rayon::prelude::*;

use crate::error::Result;

pub fn simulate_sources(pipelines: &[PipelineDescriptor], cfg: &SimulatorConfig) -> Result<Vec<SourceDataset>> {
    cfg.validate()?;
    Ok(pipelines.par_iter().map(|p| simulate_source(p, cfg)).collect::<Result<Vec<_>, _>>()?)
}

pub fn regret_matrix(datasets: &[SourceDataset], ridge: f64) -> Result<RegretMatrix> {
    validate_sources(datasets)?;
    let detectors = datasets.par_iter().map(|ds| train_detector(ds, ridge)).collect::<Result<Vec<_>, _>>()?;
    let rows = detectors.par_iter().map(|det| error_row(det, datasets)).collect::<Result<Vec<_>, _>>()?;
    let ids = datasets.iter().map(|d| d.source_id()).collect();
    Ok(RegretMatrix::from_error_matrix(ids, &rows.concat())?)
}
