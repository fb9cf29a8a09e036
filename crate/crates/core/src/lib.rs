//! Bootstrapping neural surrogates from existing image-processing pipelines.
//!
//! A classical graph-cut CRF denoiser (and, for classification, a small
//! trained CNN) acts as a black-box labeler. Its outputs on unlabeled inputs
//! train surrogate networks, optionally mixed with scarce ground truth, and
//! the experiment harness reports quality against multiply+add cost.

pub mod bootstrap;
pub mod data;
pub mod graphcut;
pub mod metrics;
pub mod nn;
pub mod rng;
pub mod selftest;
pub mod tensor;

pub use rng::Rng;
pub use tensor::{ShapeError, Tensor};
