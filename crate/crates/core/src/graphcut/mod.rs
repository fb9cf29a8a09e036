//! The classical denoising pipeline: a grid CRF minimised by graph-cut moves.

mod crf;
pub mod maxflow;
mod moves;

pub use crf::{energy, energy_counted, CrfParams, Energy, Labeling};
pub use maxflow::{max_flow, max_flow_counted, FlowGraph, MinCut};
pub use moves::{alpha_beta_swap, alpha_expansion, expansion_move, swap_move, MoveRun};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tensor::Tensor;

#[derive(Debug, Error)]
pub enum GraphCutError {
    #[error("labeling is {labeling:?} (h, w) but image shape is {image:?}")]
    DimensionMismatch {
        labeling: (usize, usize),
        image: Vec<usize>,
    },
    #[error("smoothness term is not a metric: {0}")]
    NonMetricSmoothness(String),
    #[error("swap move needs two distinct labels, got {0} twice")]
    SameLabels(usize),
    #[error("bad CRF parameters: {0}")]
    BadParams(String),
    #[error("pixel values must lie in [0, 255]")]
    PixelRange,
}

/// Running count of arithmetic operations (additions and multiplications).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounter(u64);

impl OpCounter {
    #[inline]
    pub fn add(&mut self, n: u64) {
        self.0 += n;
    }

    pub fn get(&self) -> u64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveAlgorithm {
    #[default]
    Expansion,
    Swap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Denoised {
    pub image: Tensor,
    pub labeling: Labeling,
    pub energy: Energy,
    /// Arithmetic operations spent, for cost comparisons against networks.
    pub ops: u64,
}

/// Denoises an `[H, W]` image with alpha-expansion from the nearest-label start.
pub fn denoise(image: &Tensor, p: &CrfParams) -> Result<Denoised, GraphCutError> {
    denoise_with(image, p, MoveAlgorithm::Expansion)
}

pub fn denoise_with(
    image: &Tensor,
    p: &CrfParams,
    algorithm: MoveAlgorithm,
) -> Result<Denoised, GraphCutError> {
    if image.ndim() != 2 {
        return Err(GraphCutError::DimensionMismatch {
            labeling: (0, 0),
            image: image.shape().to_vec(),
        });
    }
    if image.data().iter().any(|v| !(0.0..=255.0).contains(v)) {
        return Err(GraphCutError::PixelRange);
    }
    p.validate()?;
    let init = Labeling::nearest(image, p);
    let mut ops = OpCounter::default();
    // One subtraction per label per pixel in the nearest-label search.
    ops.add((image.len() * p.num_labels()) as u64);
    let run = match algorithm {
        MoveAlgorithm::Expansion => alpha_expansion(image, p, &init)?,
        MoveAlgorithm::Swap => alpha_beta_swap(image, p, &init)?,
    };
    ops.add(run.ops);
    let energy = energy(&run.labeling, image, p)?;
    Ok(Denoised {
        image: run.labeling.to_image(p),
        labeling: run.labeling,
        energy,
        ops: ops.get(),
    })
}
