//! The pipeline-parameter grid.
//!
//! Five processing operations, each with three levels, give 243 pipelines.
//! A pipeline is identified by the base-3 number formed by its levels, most
//! significant digit first, in the order of [`Parameter::ALL`].

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

/// Number of levels each parameter can take.
pub const LEVELS: u8 = 3;
/// Number of pipeline parameters.
pub const PARAMETER_COUNT: usize = 5;
/// Number of pipelines in the full grid (3^5).
pub const GRID_SIZE: usize = 243;

const DEFAULT_METADATA: &str = "final JPEG compression, quality factor 98";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GridError {
    #[error("level {level} of parameter {parameter} is out of range (expected 0, 1 or 2)")]
    LevelOutOfRange { parameter: Parameter, level: u8 },
    #[error("pipeline index {0} is out of range (expected 0..=242)")]
    IndexOutOfRange(usize),
    #[error("pipeline directory has {0} entries, expected 243")]
    WrongEntryCount(usize),
    #[error("pipeline index {0} appears more than once in the directory")]
    DuplicateIndex(usize),
    #[error("pipeline {index} is listed with levels that do not encode to it")]
    InconsistentEntry { index: usize },
    #[error("unknown pipeline parameter `{0}`")]
    UnknownParameter(String),
}

/// One of the five processing operations of a pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Parameter {
    Demosaicking,
    Denoising,
    SharpenMicro,
    Downsampling,
    PostResizeSharpening,
}

impl Parameter {
    /// Digit order of the index encoding, most significant first.
    pub const ALL: [Parameter; PARAMETER_COUNT] = [
        Parameter::Demosaicking,
        Parameter::Denoising,
        Parameter::SharpenMicro,
        Parameter::Downsampling,
        Parameter::PostResizeSharpening,
    ];

    /// Position of the parameter in [`Parameter::ALL`].
    pub fn position(self) -> usize {
        self as usize
    }

    /// snake_case key used in files.
    pub fn key(self) -> &'static str {
        match self {
            Parameter::Demosaicking => "demosaicking",
            Parameter::Denoising => "denoising",
            Parameter::SharpenMicro => "sharpen_micro",
            Parameter::Downsampling => "downsampling",
            Parameter::PostResizeSharpening => "post_resize_sharpening",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Parameter::Demosaicking => "Demosaicking",
            Parameter::Denoising => "Denoising",
            Parameter::SharpenMicro => "SharpenMicro",
            Parameter::Downsampling => "Downsampling",
            Parameter::PostResizeSharpening => "PostResizeSharpening",
        }
    }

    /// Accepts either the file key or the display label.
    pub fn parse(name: &str) -> Result<Parameter, GridError> {
        Parameter::ALL
            .into_iter()
            .find(|p| p.key() == name || p.label() == name)
            .ok_or_else(|| GridError::UnknownParameter(name.to_string()))
    }
}

impl fmt::Display for Parameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A parameter together with its level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PipelineParameter {
    pub parameter: Parameter,
    pub level: u8,
}

/// Maps a 5-tuple of levels to its pipeline index.
pub fn encode(levels: [u8; PARAMETER_COUNT]) -> Result<usize, GridError> {
    let mut index = 0usize;
    for (parameter, level) in Parameter::ALL.into_iter().zip(levels) {
        if level >= LEVELS {
            return Err(GridError::LevelOutOfRange { parameter, level });
        }
        index = index * LEVELS as usize + level as usize;
    }
    Ok(index)
}

/// Inverse of [`encode`].
pub fn decode(index: usize) -> Result<[u8; PARAMETER_COUNT], GridError> {
    if index >= GRID_SIZE {
        return Err(GridError::IndexOutOfRange(index));
    }
    let mut levels = [0u8; PARAMETER_COUNT];
    let mut rest = index;
    for slot in levels.iter_mut().rev() {
        *slot = (rest % LEVELS as usize) as u8;
        rest /= LEVELS as usize;
    }
    Ok(levels)
}

/// A point of the grid. Always holds a valid index and matching levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PipelineDescriptor {
    index: u16,
    levels: [u8; PARAMETER_COUNT],
}

impl PipelineDescriptor {
    pub fn from_index(index: usize) -> Result<Self, GridError> {
        let levels = decode(index)?;
        Ok(Self { index: index as u16, levels })
    }

    pub fn from_levels(levels: [u8; PARAMETER_COUNT]) -> Result<Self, GridError> {
        let index = encode(levels)?;
        Ok(Self { index: index as u16, levels })
    }

    pub fn index(&self) -> usize {
        self.index as usize
    }

    pub fn levels(&self) -> [u8; PARAMETER_COUNT] {
        self.levels
    }

    pub fn level(&self, parameter: Parameter) -> u8 {
        self.levels[parameter.position()]
    }

    pub fn parameters(&self) -> impl Iterator<Item = PipelineParameter> + '_ {
        Parameter::ALL.into_iter().zip(self.levels).map(|(parameter, level)| PipelineParameter { parameter, level })
    }
}

/// The complete list of 243 pipelines plus free-form metadata describing the
/// parts of the pipeline that are held fixed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineDirectory {
    entries: Vec<PipelineDescriptor>,
    metadata: String,
}

impl PipelineDirectory {
    /// Validates that `entries` lists each index of the grid exactly once.
    /// Entries are stored in ascending index order.
    pub fn from_entries(mut entries: Vec<PipelineDescriptor>, metadata: impl Into<String>) -> Result<Self, GridError> {
        if entries.len() != GRID_SIZE {
            return Err(GridError::WrongEntryCount(entries.len()));
        }
        entries.sort();
        for pair in entries.windows(2) {
            if pair[0].index == pair[1].index {
                return Err(GridError::DuplicateIndex(pair[0].index()));
            }
        }
        Ok(Self { entries, metadata: metadata.into() })
    }

    pub fn entries(&self) -> &[PipelineDescriptor] {
        &self.entries
    }

    pub fn metadata(&self) -> &str {
        &self.metadata
    }

    pub fn get(&self, index: usize) -> Option<&PipelineDescriptor> {
        self.entries.get(index)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Descriptors whose levels agree with every `(parameter, level)` pin.
    /// With two pins this is a 27-pipeline sub-grid.
    pub fn restrict(&self, pins: &[(Parameter, u8)]) -> Result<Vec<PipelineDescriptor>, GridError> {
        for &(parameter, level) in pins {
            if level >= LEVELS {
                return Err(GridError::LevelOutOfRange { parameter, level });
            }
        }
        Ok(self.entries.iter().filter(|d| pins.iter().all(|&(p, l)| d.level(p) == l)).copied().collect())
    }
}

/// The full grid in ascending index order.
pub fn enumerate_grid() -> PipelineDirectory {
    let entries = (0..GRID_SIZE).map(|i| PipelineDescriptor::from_index(i).expect("index below grid size")).collect();
    PipelineDirectory { entries, metadata: DEFAULT_METADATA.to_string() }
}

/// Metadata attached by [`enumerate_grid`].
pub fn default_metadata() -> &'static str {
    DEFAULT_METADATA
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encode_examples() {
        assert_eq!(encode([0, 0, 0, 0, 0]), Ok(0));
        assert_eq!(encode([2, 2, 2, 2, 2]), Ok(242));
        assert_eq!(encode([0, 0, 2, 1, 0]), Ok(21));
    }

    #[test]
    fn encode_names_offending_parameter() {
        let err = encode([0, 0, 0, 3, 0]).unwrap_err();
        assert_eq!(err, GridError::LevelOutOfRange { parameter: Parameter::Downsampling, level: 3 });
        assert!(err.to_string().contains("Downsampling"));
    }

    #[test]
    fn decode_examples() {
        assert_eq!(decode(0), Ok([0, 0, 0, 0, 0]));
        assert_eq!(decode(242), Ok([2, 2, 2, 2, 2]));
        assert_eq!(decode(60), Ok([0, 2, 0, 2, 0]));
        assert_eq!(encode(decode(60).unwrap()), Ok(60));
        assert_eq!(decode(243), Err(GridError::IndexOutOfRange(243)));
    }

    #[test]
    fn bijection_is_exhaustive() {
        for i in 0..GRID_SIZE {
            assert_eq!(encode(decode(i).unwrap()).unwrap(), i);
        }
    }

    #[test]
    fn enumerate_grid_is_complete_and_ordered() {
        let dir = enumerate_grid();
        assert_eq!(dir.len(), 243);
        assert_eq!(dir.entries()[0].index(), 0);
        assert_eq!(dir.entries()[242].index(), 242);
        assert!(dir.entries().iter().enumerate().all(|(i, d)| d.index() == i));
    }

    #[test]
    fn directory_rejects_duplicates_and_short_lists() {
        let mut entries = enumerate_grid().entries().to_vec();
        entries[5] = entries[4];
        assert_eq!(PipelineDirectory::from_entries(entries.clone(), ""), Err(GridError::DuplicateIndex(4)));
        entries.pop();
        assert_eq!(PipelineDirectory::from_entries(entries, ""), Err(GridError::WrongEntryCount(242)));
    }

    #[test]
    fn restrict_with_two_pins_gives_27() {
        let dir = enumerate_grid();
        let sub = dir.restrict(&[(Parameter::Demosaicking, 0), (Parameter::SharpenMicro, 1)]).unwrap();
        assert_eq!(sub.len(), 27);
        assert!(sub.iter().all(|d| d.level(Parameter::SharpenMicro) == 1));
    }

    #[test]
    fn parameter_parse_accepts_key_and_label() {
        assert_eq!(Parameter::parse("post_resize_sharpening"), Ok(Parameter::PostResizeSharpening));
        assert_eq!(Parameter::parse("Denoising"), Ok(Parameter::Denoising));
        assert!(Parameter::parse("crop").is_err());
    }
}
