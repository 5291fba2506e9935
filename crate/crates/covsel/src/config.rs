//! Experiment configuration, stored as JSON.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use covsel_core::grid::Parameter;
use covsel_core::{AssignmentMode, ExactOptions, ForestConfig, SimulatorConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::formats::{read_json, to_json};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub workdir: PathBuf,
    /// Feature CSV file or directory. When unset, features are simulated.
    pub features: Option<PathBuf>,
    /// Output directory, relative to `workdir` unless absolute.
    pub outputs: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self { workdir: PathBuf::from("."), features: None, outputs: PathBuf::from("outputs") }
    }
}

impl Paths {
    pub fn resolve(&self, path: &Path) -> PathBuf {
        self.workdir.join(path)
    }

    pub fn outputs_dir(&self) -> PathBuf {
        self.resolve(&self.outputs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sensitivity {
    pub demosaicking: f64,
    pub denoising: f64,
    pub sharpen_micro: f64,
    pub downsampling: f64,
    pub post_resize_sharpening: f64,
}

impl From<[f64; 5]> for Sensitivity {
    fn from(a: [f64; 5]) -> Self {
        Self {
            demosaicking: a[0],
            denoising: a[1],
            sharpen_micro: a[2],
            downsampling: a[3],
            post_resize_sharpening: a[4],
        }
    }
}

impl From<Sensitivity> for [f64; 5] {
    fn from(s: Sensitivity) -> Self {
        [s.demosaicking, s.denoising, s.sharpen_micro, s.downsampling, s.post_resize_sharpening]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulatorSection {
    pub dimension: usize,
    pub samples_per_class: usize,
    pub payload: f64,
    pub base_noise: f64,
    pub sensitivity: Sensitivity,
}

impl Default for SimulatorSection {
    fn default() -> Self {
        let d = SimulatorConfig::default();
        Self {
            dimension: d.dimension,
            samples_per_class: d.samples_per_class,
            payload: d.payload,
            base_noise: d.base_noise,
            sensitivity: d.sensitivity.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestSection {
    pub trees: usize,
    pub max_depth: Option<usize>,
    pub features_per_split: usize,
    pub min_samples_leaf: usize,
}

impl Default for ForestSection {
    fn default() -> Self {
        let d = ForestConfig::default();
        Self {
            trees: d.trees,
            max_depth: d.max_depth,
            features_per_split: d.features_per_split,
            min_samples_leaf: d.min_samples_leaf,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExactSection {
    /// Largest source count handed to the exact solver.
    pub size_limit: usize,
    pub node_budget: u64,
}

impl Default for ExactSection {
    fn default() -> Self {
        let d = ExactOptions::default();
        Self { size_limit: d.size_limit, node_budget: d.node_budget }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub paths: Paths,
    pub simulator: SimulatorSection,
    pub ridge: f64,
    pub epsilons: Vec<f64>,
    /// Extra budget at which clusters and importance are also reported.
    pub importance_epsilon: Option<f64>,
    pub min_cover: usize,
    pub baseline_variants: usize,
    pub seed: u64,
    /// Parameters held at a fixed level, restricting the simulated grid.
    pub pins: BTreeMap<String, u8>,
    pub forest: ForestSection,
    pub exact: ExactSection,
    pub assignment: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            paths: Paths::default(),
            simulator: SimulatorSection::default(),
            ridge: covsel_core::detector::DEFAULT_RIDGE,
            epsilons: vec![0.02, 0.04, 0.06, 0.08, 0.10],
            importance_epsilon: Some(0.01),
            min_cover: 10,
            baseline_variants: covsel_core::setcover::DEFAULT_VARIANTS,
            seed: 0,
            pins: BTreeMap::new(),
            forest: ForestSection::default(),
            exact: ExactSection::default(),
            assignment: AssignmentMode::default().as_str().to_string(),
        }
    }
}

fn check_epsilon(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("epsilon {eps} is outside (0, 1)")))
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let cfg: Self = read_json(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        to_json(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilons.is_empty() {
            return Err(Error::Config("at least one epsilon is required".into()));
        }
        for &eps in self.epsilons.iter().chain(&self.importance_epsilon) {
            check_epsilon(eps)?;
        }
        let mut sorted = self.epsilons.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("epsilons must be distinct".into()));
        }
        if !(self.ridge > 0.0 && self.ridge.is_finite()) {
            return Err(Error::Config(format!("ridge {} must be positive", self.ridge)));
        }
        if self.baseline_variants == 0 {
            return Err(Error::Config("baseline_variants must be at least 1".into()));
        }
        if self.forest.trees == 0 || self.forest.features_per_split == 0 || self.forest.min_samples_leaf == 0 {
            return Err(Error::Config("forest trees, features_per_split and min_samples_leaf must be positive".into()));
        }
        self.simulator_config().validate()?;
        self.pins()?;
        self.assignment_mode()?;
        Ok(())
    }

    pub fn simulator_config(&self) -> SimulatorConfig {
        SimulatorConfig {
            dimension: self.simulator.dimension,
            samples_per_class: self.simulator.samples_per_class,
            payload: self.simulator.payload,
            base_noise: self.simulator.base_noise,
            sensitivity: self.simulator.sensitivity.into(),
            seed: self.seed,
        }
    }

    pub fn forest_config(&self) -> ForestConfig {
        ForestConfig {
            trees: self.forest.trees,
            max_depth: self.forest.max_depth,
            features_per_split: self.forest.features_per_split,
            min_samples_leaf: self.forest.min_samples_leaf,
            seed: self.seed,
        }
    }

    pub fn exact_options(&self) -> ExactOptions {
        ExactOptions { node_budget: self.exact.node_budget, size_limit: self.exact.size_limit, override_limit: false }
    }

    pub fn pins(&self) -> Result<Vec<(Parameter, u8)>> {
        self.pins
            .iter()
            .map(|(k, v)| {
                let parameter = Parameter::parse(k)?;
                if *v >= covsel_core::grid::LEVELS {
                    return Err(covsel_core::GridError::LevelOutOfRange { parameter, level: *v }.into());
                }
                Ok((parameter, *v))
            })
            .collect()
    }

    pub fn assignment_mode(&self) -> Result<AssignmentMode> {
        Ok(AssignmentMode::parse(&self.assignment)?)
    }

    /// Seed of the random baselines drawn at the `i`-th epsilon.
    pub fn baseline_seed(&self, i: usize) -> u64 {
        self.seed.wrapping_add(1 + i as u64)
    }

    /// SHA-256 of the canonical JSON form, paths excluded, so that the same
    /// experiment hashes equally wherever it runs.
    pub fn hash(&self) -> String {
        let canonical = Self { paths: Paths::default(), ..self.clone() };
        let digest = Sha256::digest(serde_json::to_vec(&canonical).expect("in-memory serialisation cannot fail"));
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
