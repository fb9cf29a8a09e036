//! Datasets, corpora generators, noise, and image/dataset ingestion.

mod cifar;
mod noise;
mod pgm;
mod synth;

pub use cifar::{load_cifar10_batch, CIFAR_RECORD_BYTES};
pub use noise::{add_gaussian_noise, sample_patches};
pub use pgm::{load_pgm, save_pgm, write_pgm};
pub use synth::{synth_classification, synth_shapes};

use std::path::PathBuf;

use thiserror::Error;

use crate::rng::Rng;
use crate::tensor::Tensor;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("noise sigma must be non-negative, got {0}")]
    NegativeSigma(f64),
    #[error("patch {patch}x{patch} does not fit image {index} of shape {shape:?}")]
    PatchTooLarge {
        patch: usize,
        index: usize,
        shape: Vec<usize>,
    },
    #[error("bad generator parameters: {0}")]
    BadParams(String),
    #[error("malformed PGM header in {path}: {reason}")]
    MalformedHeader { path: PathBuf, reason: String },
    #[error("unsupported PGM maxval {maxval} in {path} (only 255)")]
    UnsupportedMaxval { path: PathBuf, maxval: u32 },
    #[error("{path}: size {size} is not a multiple of the CIFAR-10 record size")]
    TruncatedFile { path: PathBuf, size: u64 },
    #[error("label {label} out of range for {classes} classes (record {index})")]
    LabelOutOfRange {
        label: usize,
        classes: usize,
        index: usize,
    },
    #[error("dataset role {role:?} violated at example {index}: {reason}")]
    RoleViolation {
        role: DatasetRole,
        index: usize,
        reason: &'static str,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// What a labelled example should map its input to.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Image(Tensor),
    Class(usize),
}

impl Target {
    pub fn as_image(&self) -> Option<&Tensor> {
        match self {
            Target::Image(t) => Some(t),
            Target::Class(_) => None,
        }
    }

    pub fn as_class(&self) -> Option<usize> {
        match self {
            Target::Class(c) => Some(*c),
            Target::Image(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LabelSource {
    GroundTruth,
    Imputed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Label {
    pub target: Target,
    pub source: LabelSource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub input: Tensor,
    pub label: Option<Label>,
}

impl LabeledExample {
    pub fn unlabeled(input: Tensor) -> Self {
        Self { input, label: None }
    }

    pub fn ground_truth(input: Tensor, target: Target) -> Self {
        Self {
            input,
            label: Some(Label {
                target,
                source: LabelSource::GroundTruth,
            }),
        }
    }

    pub fn imputed(input: Tensor, target: Target) -> Self {
        Self {
            input,
            label: Some(Label {
                target,
                source: LabelSource::Imputed,
            }),
        }
    }

    pub fn target(&self) -> Option<&Target> {
        self.label.as_ref().map(|l| &l.target)
    }

    pub fn source(&self) -> Option<LabelSource> {
        self.label.as_ref().map(|l| l.source)
    }
}

/// Role of a collection in the bootstrapping workflow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DatasetRole {
    /// Inputs only.
    Unlabeled,
    /// Inputs with true targets.
    GroundTruth,
    /// Inputs with targets produced by the pipeline.
    Imputed,
    /// Ground-truth and imputed examples together.
    Mixed,
    Test,
    /// Half of the training data reserved for fitting the classification pipeline.
    Phi,
    /// The other half, used for training surrogates.
    Psi,
}

impl DatasetRole {
    fn check(self, ex: &LabeledExample) -> Result<(), &'static str> {
        match (self, ex.source()) {
            (DatasetRole::Unlabeled, None) => Ok(()),
            (DatasetRole::Unlabeled, Some(_)) => Err("unlabeled set carries a target"),
            (DatasetRole::Imputed, Some(LabelSource::Imputed)) => Ok(()),
            (DatasetRole::Imputed, _) => Err("expected an imputed label"),
            (DatasetRole::Mixed, Some(_)) => Ok(()),
            (_, Some(LabelSource::GroundTruth)) => Ok(()),
            (_, _) => Err("expected a ground-truth label"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    role: DatasetRole,
    examples: Vec<LabeledExample>,
}

impl Dataset {
    pub fn new(role: DatasetRole, examples: Vec<LabeledExample>) -> Result<Self, DataError> {
        for (index, ex) in examples.iter().enumerate() {
            role.check(ex)
                .map_err(|reason| DataError::RoleViolation { role, index, reason })?;
            if let Some(Target::Image(t)) = ex.target() {
                if t.shape() != ex.input.shape() {
                    return Err(DataError::RoleViolation {
                        role,
                        index,
                        reason: "image target shape differs from input",
                    });
                }
            }
        }
        Ok(Self { role, examples })
    }

    pub fn unlabeled(inputs: Vec<Tensor>) -> Self {
        Self {
            role: DatasetRole::Unlabeled,
            examples: inputs.into_iter().map(LabeledExample::unlabeled).collect(),
        }
    }

    pub fn role(&self) -> DatasetRole {
        self.role
    }

    /// Re-tag the collection; fails if the examples do not satisfy `role`.
    pub fn with_role(self, role: DatasetRole) -> Result<Self, DataError> {
        Self::new(role, self.examples)
    }

    pub fn examples(&self) -> &[LabeledExample] {
        &self.examples
    }

    pub fn into_examples(self) -> Vec<LabeledExample> {
        self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn inputs(&self) -> impl Iterator<Item = &Tensor> {
        self.examples.iter().map(|e| &e.input)
    }

    /// Class targets, if every example carries one.
    pub fn class_labels(&self) -> Option<Vec<usize>> {
        self.examples
            .iter()
            .map(|e| e.target().and_then(Target::as_class))
            .collect()
    }

    /// Drop all targets.
    pub fn strip_labels(&self) -> Dataset {
        Dataset::unlabeled(self.examples.iter().map(|e| e.input.clone()).collect())
    }

    /// Subset by index, keeping the role.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            role: self.role,
            examples: indices.iter().map(|&i| self.examples[i].clone()).collect(),
        }
    }

    pub fn map_examples(&self, f: impl Fn(&LabeledExample) -> LabeledExample) -> Dataset {
        Dataset {
            role: self.role,
            examples: self.examples.iter().map(f).collect(),
        }
    }
}

/// Seeded shuffle split; the first part holds `round(fraction * N)` examples.
/// Both parts keep the input's role.
pub fn split(d: &Dataset, fraction: f64, rng: &mut Rng) -> (Dataset, Dataset) {
    let fraction = fraction.clamp(0.0, 1.0);
    let n = d.len();
    let first = ((fraction * n as f64).round() as usize).min(n);
    let order = rng.permutation(n);
    (d.select(&order[..first]), d.select(&order[first..]))
}
