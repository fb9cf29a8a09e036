//! Label imputation with a black-box pipeline, ratio mixing, and the
//! experiment drivers that train and score surrogates.

mod config;
mod experiment;
mod mix;
mod pipeline;

pub use config::{
    ArchConfig, ClassifyConfig, DenoiseConfig, ExperimentConfig, Mode, NoiseModel, StudentConfig,
    Task,
};
pub use experiment::{
    classification_data, denoise_data, run_classify_experiment, run_denoise_experiment,
    run_experiment, run_ratio_sweep, ClassificationData, DenoiseData, SweepResult,
};
pub use mix::{gt_count, mix_datasets, MixConfig};
pub use pipeline::{
    impute_labels, scale_pixels, BlackBoxPipeline, CrfDenoiser, Evaluation, FnPipeline, Imputation,
    NetworkClassifier,
};

use std::path::PathBuf;

use thiserror::Error;

use crate::data::{DataError, DatasetRole, LabelSource};
use crate::graphcut::GraphCutError;
use crate::metrics::MetricsError;
use crate::nn::NnError;

#[derive(Debug, Error)]
pub enum BootstrapError {
    #[error("imputation needs an unlabeled dataset, got role {0:?}")]
    NotUnlabeled(DatasetRole),
    #[error("pipeline {pipeline} failed on example {index}: {message}")]
    PipelineEvaluationFailure {
        pipeline: String,
        index: usize,
        message: String,
    },
    #[error("need {needed} ground-truth examples, only {available} available")]
    InsufficientGroundTruth { needed: usize, available: usize },
    #[error("need {needed} imputed examples, only {available} available")]
    InsufficientImputed { needed: usize, available: usize },
    #[error("example {index} is not tagged {expected:?}")]
    WrongLabelSource { index: usize, expected: LabelSource },
    #[error("ratio {0} outside [0, 1]")]
    BadRatio(f64),
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    GraphCut(#[from] GraphCutError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
