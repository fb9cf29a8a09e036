use serde::{Deserialize, Serialize};

use super::BootstrapError;
use crate::data::{Dataset, DatasetRole, LabelSource};
use crate::rng::Rng;

/// Fixed-size training set with a given fraction of ground-truth examples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixConfig {
    pub ratio_x: f64,
    pub total_n: usize,
    pub seed: u64,
}

impl MixConfig {
    /// Ground-truth count: `ratio_x * total_n` rounded half up.
    pub fn ground_truth_count(&self) -> usize {
        gt_count(self.ratio_x, self.total_n)
    }
}

pub fn gt_count(ratio_x: f64, total_n: usize) -> usize {
    (ratio_x * total_n as f64 + 0.5).floor().max(0.0) as usize
}

/// Draws `round(ratio_x * total_n)` examples from `l` and the remainder from
/// `s`, without replacement, ground truth first. Each example keeps its
/// ground-truth or imputed tag.
pub fn mix_datasets(l: &Dataset, s: &Dataset, cfg: &MixConfig) -> Result<Dataset, BootstrapError> {
    if !(0.0..=1.0).contains(&cfg.ratio_x) {
        return Err(BootstrapError::BadRatio(cfg.ratio_x));
    }
    require_source(l, LabelSource::GroundTruth)?;
    require_source(s, LabelSource::Imputed)?;
    let k = cfg.ground_truth_count();
    if k > l.len() {
        return Err(BootstrapError::InsufficientGroundTruth {
            needed: k,
            available: l.len(),
        });
    }
    let rest = cfg.total_n - k;
    if rest > s.len() {
        return Err(BootstrapError::InsufficientImputed {
            needed: rest,
            available: s.len(),
        });
    }
    let gt_idx = Rng::child(cfg.seed, 0).permutation(l.len());
    let imp_idx = Rng::child(cfg.seed, 1).permutation(s.len());
    let mut examples = l.select(&gt_idx[..k]).into_examples();
    examples.extend(s.select(&imp_idx[..rest]).into_examples());
    Ok(Dataset::new(DatasetRole::Mixed, examples)?)
}

fn require_source(d: &Dataset, want: LabelSource) -> Result<(), BootstrapError> {
    match d.examples().iter().position(|e| e.source() != Some(want)) {
        Some(index) => Err(BootstrapError::WrongLabelSource { index, expected: want }),
        None => Ok(()),
    }
}
