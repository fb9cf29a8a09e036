//! Black-box pipelines and label imputation.

use rayon::prelude::*;

use super::BootstrapError;
use crate::data::{Dataset, DatasetRole, LabeledExample, Target};
use crate::graphcut::{denoise_with, CrfParams, MoveAlgorithm};
use crate::nn::{count_flops, Network};
use crate::tensor::Tensor;

/// One pipeline call: its output and the arithmetic it cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub output: Target,
    pub ops: u64,
}

/// An opaque input-to-output mapping. Calls must be deterministic and free
/// of side effects; they may run concurrently on distinct inputs.
pub trait BlackBoxPipeline: Sync {
    fn name(&self) -> &str;
    fn evaluate(&self, input: &Tensor) -> Result<Evaluation, String>;
}

/// The graph-cut CRF denoiser on `[H, W]` images.
#[derive(Debug, Clone)]
pub struct CrfDenoiser {
    pub params: CrfParams,
    pub algorithm: MoveAlgorithm,
}

impl CrfDenoiser {
    pub fn new(params: CrfParams) -> Self {
        Self {
            params,
            algorithm: MoveAlgorithm::Expansion,
        }
    }
}

impl BlackBoxPipeline for CrfDenoiser {
    fn name(&self) -> &str {
        "crf_graphcut"
    }

    fn evaluate(&self, input: &Tensor) -> Result<Evaluation, String> {
        let out = denoise_with(input, &self.params, self.algorithm).map_err(|e| e.to_string())?;
        Ok(Evaluation {
            output: Target::Image(out.image),
            ops: out.ops,
        })
    }
}

/// A trained classifier over `[C, H, W]` pixel images; emits the argmax class.
#[derive(Debug, Clone)]
pub struct NetworkClassifier {
    pub name: String,
    pub net: Network,
}

impl BlackBoxPipeline for NetworkClassifier {
    fn name(&self) -> &str {
        &self.name
    }

    fn evaluate(&self, input: &Tensor) -> Result<Evaluation, String> {
        let x = Tensor::stack(&[&scale_pixels(input)]).map_err(|e| e.to_string())?;
        let logits = self.net.forward(&x).map_err(|e| e.to_string())?;
        let ops = count_flops(&self.net, input.shape()).map_err(|e| e.to_string())?;
        Ok(Evaluation {
            output: Target::Class(logits.argmax()),
            ops,
        })
    }
}

/// Wraps a closure as a pipeline; ops are reported as zero.
pub struct FnPipeline<F> {
    name: String,
    f: F,
}

impl<F> FnPipeline<F>
where
    F: Fn(&Tensor) -> Result<Target, String> + Sync,
{
    pub fn new(name: impl Into<String>, f: F) -> Self {
        Self {
            name: name.into(),
            f,
        }
    }
}

impl<F> BlackBoxPipeline for FnPipeline<F>
where
    F: Fn(&Tensor) -> Result<Target, String> + Sync,
{
    fn name(&self) -> &str {
        &self.name
    }

    fn evaluate(&self, input: &Tensor) -> Result<Evaluation, String> {
        Ok(Evaluation {
            output: (self.f)(input)?,
            ops: 0,
        })
    }
}

/// Pixels in [0, 255] to network units in [0, 1].
pub fn scale_pixels(t: &Tensor) -> Tensor {
    t.map(|v| v / 255.0)
}

/// Imputed set plus the total pipeline cost of producing it.
#[derive(Debug, Clone)]
pub struct Imputation {
    pub dataset: Dataset,
    pub ops: u64,
}

/// Labels every input of `u` with `p`. Order is preserved and the result
/// does not depend on how many threads evaluate it.
pub fn impute_labels(p: &dyn BlackBoxPipeline, u: &Dataset) -> Result<Imputation, BootstrapError> {
    if u.role() != DatasetRole::Unlabeled {
        return Err(BootstrapError::NotUnlabeled(u.role()));
    }
    let evaluated: Vec<Result<Evaluation, BootstrapError>> = u
        .examples()
        .par_iter()
        .enumerate()
        .map(|(index, ex)| {
            p.evaluate(&ex.input)
                .map_err(|message| BootstrapError::PipelineEvaluationFailure {
                    pipeline: p.name().to_string(),
                    index,
                    message,
                })
        })
        .collect();
    let mut examples = Vec::with_capacity(u.len());
    let mut ops = 0u64;
    for (ex, ev) in u.examples().iter().zip(evaluated) {
        let ev = ev?;
        ops += ev.ops;
        examples.push(LabeledExample::imputed(ex.input.clone(), ev.output));
    }
    Ok(Imputation {
        dataset: Dataset::new(DatasetRole::Imputed, examples)?,
        ops,
    })
}
