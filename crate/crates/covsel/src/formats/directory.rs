//! Pipeline directory: a JSON array of `{"index", "levels": {...}}` objects.

use std::path::Path;

use covsel_core::grid::{default_metadata, PipelineDescriptor, PipelineDirectory};
use covsel_core::GridError;
use serde::{Deserialize, Serialize};

use super::{read_json, write_json};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelsRecord {
    pub demosaicking: u8,
    pub denoising: u8,
    pub sharpen_micro: u8,
    pub downsampling: u8,
    pub post_resize_sharpening: u8,
}

impl From<[u8; 5]> for LevelsRecord {
    fn from(l: [u8; 5]) -> Self {
        Self {
            demosaicking: l[0],
            denoising: l[1],
            sharpen_micro: l[2],
            downsampling: l[3],
            post_resize_sharpening: l[4],
        }
    }
}

impl From<LevelsRecord> for [u8; 5] {
    fn from(r: LevelsRecord) -> Self {
        [r.demosaicking, r.denoising, r.sharpen_micro, r.downsampling, r.post_resize_sharpening]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineRecord {
    pub index: usize,
    pub levels: LevelsRecord,
}

pub fn to_records(directory: &PipelineDirectory) -> Vec<PipelineRecord> {
    directory.entries().iter().map(|d| PipelineRecord { index: d.index(), levels: d.levels().into() }).collect()
}

/// Rebuilds a directory, checking each record's levels against its index.
/// The file carries no metadata; the default description is attached.
pub fn from_records(records: Vec<PipelineRecord>) -> Result<PipelineDirectory> {
    let entries = records
        .into_iter()
        .map(|r| {
            let desc = PipelineDescriptor::from_levels(r.levels.into())?;
            if desc.index() != r.index {
                return Err(GridError::InconsistentEntry { index: r.index });
            }
            Ok(desc)
        })
        .collect::<Result<Vec<_>, GridError>>()?;
    Ok(PipelineDirectory::from_entries(entries, default_metadata())?)
}

pub fn write_directory(path: &Path, directory: &PipelineDirectory) -> Result<()> {
    write_json(path, &to_records(directory))
}

pub fn read_directory(path: &Path) -> Result<PipelineDirectory> {
    let records: Vec<PipelineRecord> = read_json(path)?;
    from_records(records).map_err(|e| match e {
        Error::Grid(g) => Error::Config(format!("{}: {g}", path.display())),
        other => other,
    })
}
