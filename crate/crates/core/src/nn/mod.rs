//! From-scratch tensor layers, skip-connected networks, SGD training and FLOP accounting.

pub mod checkpoint;
mod layer;
mod network;
pub mod ops;
mod train;

pub use layer::{Conv2d, Dense, Layer};
pub use network::{
    build_skip_autoencoder, build_target_classifier, conv2d_flops, count_flops, dense_flops,
    ClassifierArch, FlopLedger, ForwardCache, Gradients, Network, Skip,
};
pub use train::{batch_loss, predict, train, LossKind, LrSchedule, SgdConfig, TrainLog};

use thiserror::Error;

use crate::tensor::ShapeError;

#[derive(Debug, Error)]
pub enum NnError {
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("skip autoencoder depth must be even and >= 2, got {0}")]
    OddDepth(usize),
    #[error("bad architecture: {0}")]
    BadArchitecture(String),
    #[error("cannot train on an empty dataset")]
    EmptyDataset,
    #[error("example {0} has no target")]
    MissingLabel(usize),
    #[error("target kind does not match the loss")]
    TargetKindMismatch,
    #[error("invalid SGD config: {0}")]
    InvalidConfig(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
