//! JSON experiment configuration. Unknown keys are rejected everywhere.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::BootstrapError;
use crate::graphcut::{CrfParams, MoveAlgorithm};
use crate::nn::{LrSchedule, SgdConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Denoise,
    Classify,
}

/// `experiment` trains surrogates on imputed labels only; `sweep` varies the
/// ground-truth ratio.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Experiment,
    Sweep,
}

/// How `sigma` is read: as a standard deviation, or literally as a variance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    #[default]
    StdDev,
    Variance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Task,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub denoise: DenoiseConfig,
    #[serde(default)]
    pub classify: ClassifyConfig,
    /// CSV destination, relative to the output directory.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(task: Task, mode: Mode) -> Self {
        Self {
            task,
            mode,
            seed: 0,
            denoise: DenoiseConfig::default(),
            classify: ClassifyConfig::default(),
            output: None,
        }
    }

    /// Parses JSON text; errors name the offending key path.
    pub fn from_json(text: &str) -> Result<Self, BootstrapError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            BootstrapError::Config(format!("at `{path}`: {}", e.into_inner()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, BootstrapError> {
        let text = std::fs::read_to_string(path).map_err(|source| BootstrapError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), BootstrapError> {
        let bad = |msg: String| Err(BootstrapError::Config(msg));
        let ratios = match self.task {
            Task::Denoise => &self.denoise.ratios,
            Task::Classify => &self.classify.ratios,
        };
        if let Some(r) = ratios.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return bad(format!("ratio {r} outside [0, 1]"));
        }
        let d = &self.denoise;
        d.crf.validate().map_err(|e| BootstrapError::Config(format!("denoise.crf: {e}")))?;
        d.sgd.validate().map_err(|e| BootstrapError::Config(format!("denoise.sgd: {e}")))?;
        d.sweep_sgd
            .validate()
            .map_err(|e| BootstrapError::Config(format!("denoise.sweep_sgd: {e}")))?;
        if d.sigma < 0.0 || !d.sigma.is_finite() {
            return bad(format!("denoise.sigma {} must be finite and non-negative", d.sigma));
        }
        if d.train_images == 0 || d.test_images == 0 {
            return bad("denoise.train_images and test_images must be positive".into());
        }
        if let Some(&depth) = d.depths.iter().chain([&d.sweep_depth]).find(|&&x| x < 2 || x % 2 == 1) {
            return bad(format!("denoise depth {depth} must be even and >= 2"));
        }
        let c = &self.classify;
        c.sgd.validate().map_err(|e| BootstrapError::Config(format!("classify.sgd: {e}")))?;
        if !(0.0..=1.0).contains(&c.phi_fraction) {
            return bad(format!("classify.phi_fraction {} outside [0, 1]", c.phi_fraction));
        }
        if c.students.is_empty() {
            return bad("classify.students must name at least one network".into());
        }
        Ok(())
    }

    pub fn ratios(&self) -> &[f64] {
        match self.task {
            Task::Denoise => &self.denoise.ratios,
            Task::Classify => &self.classify.ratios,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DenoiseConfig {
    pub train_images: usize,
    pub test_images: usize,
    /// Side of the square images (or patches cut from `clean_pgms`).
    pub size: usize,
    /// Intensity levels per synthetic image.
    pub levels: usize,
    pub sigma: f64,
    pub noise_model: NoiseModel,
    /// Clean PGM images to cut patches from instead of the synthetic corpus.
    pub clean_pgms: Vec<PathBuf>,
    pub crf: CrfParams,
    pub algorithm: MoveAlgorithm,
    pub depths: Vec<usize>,
    pub channels: usize,
    pub sgd: SgdConfig,
    pub sweep_depth: usize,
    /// Training schedule for every network of the ratio sweep.
    pub sweep_sgd: SgdConfig,
    pub ratios: Vec<f64>,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        Self {
            train_images: 64,
            test_images: 16,
            size: 32,
            levels: 4,
            sigma: 20.0,
            noise_model: NoiseModel::StdDev,
            clean_pgms: Vec::new(),
            crf: CrfParams::default(),
            algorithm: MoveAlgorithm::Expansion,
            depths: vec![4],
            channels: 16,
            sgd: SgdConfig {
                learning_rate: 0.03,
                momentum: 0.9,
                batch_size: 1,
                epochs: 400,
                seed: 0,
                schedule: LrSchedule::Constant,
            },
            sweep_depth: 4,
            sweep_sgd: SgdConfig {
                learning_rate: 0.03,
                momentum: 0.9,
                batch_size: 1,
                epochs: 200,
                seed: 0,
                schedule: LrSchedule::Constant,
            },
            ratios: vec![0.03, 0.3, 1.0],
        }
    }
}

impl DenoiseConfig {
    /// Standard deviation of the additive noise.
    pub fn noise_std(&self) -> f64 {
        match self.noise_model {
            NoiseModel::StdDev => self.sigma,
            NoiseModel::Variance => self.sigma.sqrt(),
        }
    }
}

/// Classifier shape: two conv+ReLU blocks then dense layers of `hidden`
/// widths, closed by a layer of one logit per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArchConfig {
    pub conv_channels: usize,
    pub kernel: usize,
    pub hidden: Vec<usize>,
}

impl Default for ArchConfig {
    fn default() -> Self {
        Self {
            conv_channels: 8,
            kernel: 3,
            hidden: vec![32],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudentConfig {
    pub name: String,
    #[serde(default)]
    pub arch: ArchConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifyConfig {
    pub num_classes: usize,
    pub size: usize,
    pub train_count: usize,
    pub test_count: usize,
    /// CIFAR-10 binary batches; when set, replace the synthetic task.
    pub cifar_train: Vec<PathBuf>,
    pub cifar_test: Option<PathBuf>,
    pub phi_fraction: f64,
    /// Fit the pipeline on all training data instead of on the Φ half.
    pub teacher_on_all: bool,
    pub teacher: ArchConfig,
    pub students: Vec<StudentConfig>,
    pub sgd: SgdConfig,
    pub ratios: Vec<f64>,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            num_classes: 4,
            size: 12,
            train_count: 2000,
            test_count: 400,
            cifar_train: Vec::new(),
            cifar_test: None,
            phi_fraction: 0.5,
            teacher_on_all: false,
            teacher: ArchConfig::default(),
            students: vec![StudentConfig {
                name: "student".into(),
                arch: ArchConfig::default(),
            }],
            sgd: SgdConfig {
                learning_rate: 0.01,
                momentum: 0.9,
                batch_size: 16,
                epochs: 15,
                seed: 0,
                schedule: LrSchedule::Constant,
            },
            ratios: vec![0.003, 0.01, 0.1, 1.0],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses() {
        let cfg = ExperimentConfig::from_json(r#"{"task": "denoise"}"#).unwrap();
        assert_eq!(cfg.task, Task::Denoise);
        assert_eq!(cfg.mode, Mode::Experiment);
        assert_eq!(cfg.denoise, DenoiseConfig::default());
    }

    #[test]
    fn unknown_key_is_named() {
        let err = ExperimentConfig::from_json(r#"{"task": "denoise", "denoise": {"sigmaa": 3}}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("denoise"), "{err}");
        assert!(err.contains("sigmaa"), "{err}");
    }

    #[test]
    fn bad_values_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"task": "classify", "classify": {"ratios": [1.5]}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"task": "denoise", "denoise": {"depths": [3]}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"task": "dance"}"#).is_err());
    }

    #[test]
    fn variance_reading() {
        let d = DenoiseConfig {
            noise_model: NoiseModel::Variance,
            ..DenoiseConfig::default()
        };
        assert!((d.noise_std() - 20f64.sqrt()).abs() < 1e-12);
    }
}
