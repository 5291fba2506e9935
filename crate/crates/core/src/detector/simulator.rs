//! Synthetic cover sources.
//!
//! Covers are zero-mean Gaussian vectors with a diagonal covariance shaped by
//! the pipeline levels. Denoising lowers the noise, micro-sharpening,
//! post-resize sharpening and downsampling raise it uniformly, and the
//! demosaicking algorithm reshapes it across coordinates. A stego is its cover
//! plus a fixed-direction shift whose per-coordinate amplitude follows the
//! cover noise relative to the base level, so embedding hides more change
//! where the cover is noisier. With all sensitivities at zero the shift is
//! exactly `payload * u`.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{DetectorError, Label, Sample, SourceDataset, SourceId};
use crate::grid::{Parameter, PipelineDescriptor, PARAMETER_COUNT};

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatorConfig {
    /// Feature dimension.
    pub dimension: usize,
    /// Covers per source; each cover also yields one stego.
    pub samples_per_class: usize,
    /// Stego shift magnitude. Zero makes covers and stegos identical.
    pub payload: f64,
    /// Noise standard deviation of a pipeline with every factor at 1.
    pub base_noise: f64,
    /// Sensitivity coefficient per parameter, indexed by [`Parameter::position`].
    pub sensitivity: [f64; PARAMETER_COUNT],
    pub seed: u64,
}

impl Default for SimulatorConfig {
    fn default() -> Self {
        Self {
            dimension: 64,
            samples_per_class: 400,
            payload: 2.5,
            base_noise: 1.0,
            sensitivity: [0.05, 1.5, 0.05, 0.3, 0.4],
            seed: 0,
        }
    }
}

impl SimulatorConfig {
    pub fn sensitivity_of(&self, parameter: Parameter) -> f64 {
        self.sensitivity[parameter.position()]
    }

    pub fn with_sensitivity(mut self, parameter: Parameter, value: f64) -> Self {
        self.sensitivity[parameter.position()] = value;
        self
    }

    pub fn validate(&self) -> Result<(), DetectorError> {
        if self.dimension == 0 {
            return Err(DetectorError::ZeroDimension);
        }
        if self.samples_per_class < 2 {
            return Err(DetectorError::InvalidConfig("samples_per_class must be at least 2"));
        }
        if !(self.payload >= 0.0 && self.payload.is_finite()) {
            return Err(DetectorError::InvalidConfig("payload must be finite and non-negative"));
        }
        if !(self.base_noise > 0.0 && self.base_noise.is_finite()) {
            return Err(DetectorError::InvalidConfig("base_noise must be finite and positive"));
        }
        if !self.sensitivity.iter().all(|a| *a >= 0.0 && a.is_finite()) {
            return Err(DetectorError::InvalidConfig("sensitivity coefficients must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Per-coordinate demosaicking modulation in [0, 1]. Level 0 leaves the noise
/// flat, levels 1 and 2 tilt it towards the high or the low coordinates.
fn demosaick_modulation(level: u8, coord: usize, dimension: usize) -> f64 {
    let t = (coord as f64 + 0.5) / dimension as f64;
    match level {
        0 => 0.0,
        1 => t,
        _ => 1.0 - t,
    }
}

/// Cover noise standard deviation of every coordinate.
pub fn noise_profile(desc: &PipelineDescriptor, cfg: &SimulatorConfig) -> Vec<f64> {
    let level = |p: Parameter| f64::from(desc.level(p));
    let a = |p: Parameter| cfg.sensitivity_of(p);
    let uniform = cfg.base_noise
        * (1.0 + a(Parameter::Denoising) * (2.0 - level(Parameter::Denoising)))
        * (1.0 + a(Parameter::SharpenMicro) * level(Parameter::SharpenMicro))
        * (1.0 + a(Parameter::PostResizeSharpening) * level(Parameter::PostResizeSharpening))
        * (1.0 + a(Parameter::Downsampling) * level(Parameter::Downsampling));
    let demosaick = desc.level(Parameter::Demosaicking);
    (0..cfg.dimension)
        .map(|j| uniform * (1.0 + a(Parameter::Demosaicking) * demosaick_modulation(demosaick, j, cfg.dimension)))
        .collect()
}

/// Difference between a stego and its cover.
pub fn stego_shift(desc: &PipelineDescriptor, cfg: &SimulatorConfig) -> Vec<f64> {
    let unit = 1.0 / libm::sqrt(cfg.dimension as f64);
    noise_profile(desc, cfg).into_iter().map(|sigma| cfg.payload * unit * sigma / cfg.base_noise).collect()
}

/// Draws the dataset of the source produced by `desc`.
///
/// Each source reads its own ChaCha stream (selected by the pipeline index)
/// of the generator seeded with `cfg.seed`, so the output depends only on
/// `desc` and `cfg`. Cover/stego pairs stay together; the first half of the
/// pairs forms the train split.
pub fn simulate_source(desc: &PipelineDescriptor, cfg: &SimulatorConfig) -> Result<SourceDataset, DetectorError> {
    cfg.validate()?;
    let sigma = noise_profile(desc, cfg);
    let shift = stego_shift(desc, cfg);
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    rng.set_stream(desc.index() as u64);

    let n_train = cfg.samples_per_class / 2;
    let mut train = Vec::with_capacity(2 * n_train);
    let mut test = Vec::with_capacity(2 * (cfg.samples_per_class - n_train));
    for pair in 0..cfg.samples_per_class {
        let cover: Vec<f64> = sigma
            .iter()
            .map(|s| {
                let z: f64 = StandardNormal.sample(&mut rng);
                s * z
            })
            .collect();
        let stego: Vec<f64> = cover.iter().zip(&shift).map(|(c, d)| c + d).collect();
        let split = if pair < n_train { &mut train } else { &mut test };
        split.push(Sample::new(cover, Label::Cover));
        split.push(Sample::new(stego, Label::Stego));
    }
    SourceDataset::new(desc.index() as SourceId, train, test)
}
