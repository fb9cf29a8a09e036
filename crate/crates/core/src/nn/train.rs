use serde::{Deserialize, Serialize};

use super::network::Network;
use super::ops;
use super::NnError;
use crate::data::{Dataset, Target};
use crate::rng::Rng;
use crate::tensor::Tensor;

/// Mini-batch SGD with classical momentum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SgdConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub schedule: LrSchedule,
}

/// Per-epoch learning-rate multiplier.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrSchedule {
    #[default]
    Constant,
    /// Half-cosine from the base rate down to zero over the run.
    Cosine,
}

impl LrSchedule {
    pub fn factor(self, epoch: usize, epochs: usize) -> f64 {
        match self {
            LrSchedule::Constant => 1.0,
            LrSchedule::Cosine => {
                0.5 * (1.0 + (std::f64::consts::PI * epoch as f64 / epochs.max(1) as f64).cos())
            }
        }
    }
}

impl Default for SgdConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            momentum: 0.9,
            batch_size: 16,
            epochs: 10,
            seed: 0,
            schedule: LrSchedule::Constant,
        }
    }
}

impl SgdConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        let bad = |what: &str| Err(NnError::InvalidConfig(what.to_string()));
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be finite and non-negative");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum must lie in [0, 1)");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if self.epochs == 0 {
            return bad("epochs must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Mse,
    SoftmaxCrossEntropy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainLog {
    /// Example-weighted mean loss of each epoch, measured during the epoch.
    pub epoch_loss: Vec<f64>,
}

impl TrainLog {
    pub fn final_loss(&self) -> f64 {
        *self.epoch_loss.last().unwrap_or(&f64::NAN)
    }
}

/// Loss and output gradient of one batch.
pub fn batch_loss(
    output: &Tensor,
    targets: &[&Target],
    loss: LossKind,
) -> Result<(f64, Tensor), NnError> {
    match loss {
        LossKind::Mse => {
            let images = targets
                .iter()
                .map(|t| t.as_image().ok_or(NnError::TargetKindMismatch))
                .collect::<Result<Vec<_>, _>>()?;
            let stacked = Tensor::stack(&images)?;
            Ok(ops::mse_loss(output, &stacked)?)
        }
        LossKind::SoftmaxCrossEntropy => {
            let labels = targets
                .iter()
                .map(|t| t.as_class().ok_or(NnError::TargetKindMismatch))
                .collect::<Result<Vec<_>, _>>()?;
            ops::softmax_xent(output, &labels)
        }
    }
}

/// Trains `net` in place. Shuffle order for epoch `e` comes from the stream
/// `Rng::child(cfg.seed, e)`, and gradients are reduced in a fixed order, so
/// equal inputs give bit-identical parameters.
pub fn train(
    net: &mut Network,
    data: &Dataset,
    loss: LossKind,
    cfg: &SgdConfig,
) -> Result<TrainLog, NnError> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(NnError::EmptyDataset);
    }
    let targets = data
        .examples()
        .iter()
        .enumerate()
        .map(|(i, ex)| ex.target().ok_or(NnError::MissingLabel(i)))
        .collect::<Result<Vec<_>, _>>()?;

    let mut velocity: Vec<Option<(Tensor, Tensor)>> = net
        .layers()
        .iter()
        .map(|l| l.params().map(|(w, b)| (Tensor::zeros(w.shape()), Tensor::zeros(b.shape()))))
        .collect();

    let mut epoch_loss = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let order = Rng::child(cfg.seed, epoch as u64).permutation(data.len());
        let lr = cfg.learning_rate * cfg.schedule.factor(epoch, cfg.epochs);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let inputs: Vec<&Tensor> = batch.iter().map(|&i| &data.examples()[i].input).collect();
            let batch_targets: Vec<&Target> = batch.iter().map(|&i| targets[i]).collect();
            let x = Tensor::stack(&inputs)?;
            let (out, cache) = net.forward_train(&x)?;
            let (value, grad) = batch_loss(&out, &batch_targets, loss)?;
            let (grads, _) = net.backward(&cache, &grad)?;
            total += value * batch.len() as f64;

            for ((layer, g), v) in net
                .layers_mut()
                .iter_mut()
                .zip(grads.layers)
                .zip(velocity.iter_mut())
            {
                let (Some((w, b)), Some(g), Some((vw, vb))) = (layer.params_mut(), g, v.as_mut())
                else {
                    continue;
                };
                momentum_step(w, vw, &g.weight, lr, cfg.momentum);
                momentum_step(b, vb, &g.bias, lr, cfg.momentum);
            }
        }
        epoch_loss.push(total / data.len() as f64);
    }
    Ok(TrainLog { epoch_loss })
}

fn momentum_step(param: &mut Tensor, velocity: &mut Tensor, grad: &Tensor, lr: f64, momentum: f64) {
    for ((p, v), g) in param
        .data_mut()
        .iter_mut()
        .zip(velocity.data_mut())
        .zip(grad.data())
    {
        *v = momentum * *v - lr * g;
        *p += *v;
    }
}

/// Runs `net` over `inputs` in chunks of `batch` and returns one output per input.
pub fn predict(net: &Network, inputs: &[&Tensor], batch: usize) -> Result<Vec<Tensor>, NnError> {
    let mut out = Vec::with_capacity(inputs.len());
    for chunk in inputs.chunks(batch.max(1)) {
        let y = net.forward(&Tensor::stack(chunk)?)?;
        out.extend((0..chunk.len()).map(|i| y.outer(i)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{DatasetRole, LabeledExample};
    use crate::nn::layer::{Dense, Layer};

    fn line_data() -> Dataset {
        let examples = (0..20)
            .map(|i| {
                let x = i as f64 / 10.0 - 1.0;
                LabeledExample::ground_truth(
                    Tensor::full(&[1], x),
                    Target::Image(Tensor::full(&[1], 2.0 * x)),
                )
            })
            .collect();
        Dataset::new(DatasetRole::GroundTruth, examples).unwrap()
    }

    fn one_dense(seed: u64) -> Network {
        Network::new(vec![Layer::Dense(Dense::new(1, 1, &mut Rng::new(seed)))], vec![]).unwrap()
    }

    #[test]
    fn zero_learning_rate_changes_nothing() {
        let mut net = one_dense(1);
        let before = net.clone();
        let cfg = SgdConfig {
            learning_rate: 0.0,
            epochs: 3,
            ..Default::default()
        };
        let log = train(&mut net, &line_data(), LossKind::Mse, &cfg).unwrap();
        assert_eq!(net, before);
        assert!(log.epoch_loss.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn rejects_empty_and_bad_config() {
        let mut net = one_dense(1);
        let empty = Dataset::new(DatasetRole::GroundTruth, vec![]).unwrap();
        assert!(matches!(
            train(&mut net, &empty, LossKind::Mse, &SgdConfig::default()),
            Err(NnError::EmptyDataset)
        ));
        let cfg = SgdConfig {
            momentum: 1.0,
            ..Default::default()
        };
        assert!(train(&mut net, &line_data(), LossKind::Mse, &cfg).is_err());
    }

    #[test]
    fn wrong_target_kind() {
        let mut net = one_dense(1);
        let d = Dataset::new(
            DatasetRole::GroundTruth,
            vec![LabeledExample::ground_truth(Tensor::full(&[1], 0.0), Target::Class(0))],
        )
        .unwrap();
        assert!(matches!(
            train(&mut net, &d, LossKind::Mse, &SgdConfig::default()),
            Err(NnError::TargetKindMismatch)
        ));
    }
}
