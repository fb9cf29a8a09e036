use serde::{Deserialize, Serialize};

use super::{GraphCutError, OpCounter};
use crate::tensor::Tensor;

/// Grid CRF coefficients.
///
/// Data cost `D_p(l) = min((label_values[l] - I_p)^2, data_trunc)` and
/// smoothness `V(a, b) = lambda * min(|label_values[a] - label_values[b]|, smooth_trunc)`
/// over 4-connected neighbour pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrfParams {
    pub label_values: Vec<f64>,
    pub lambda: f64,
    pub smooth_trunc: f64,
    /// `None` means no truncation.
    #[serde(default)]
    pub data_trunc: Option<f64>,
}

impl Default for CrfParams {
    /// 32 labels spread uniformly over [0, 255], lambda 16, T 32, untruncated data term.
    fn default() -> Self {
        Self::uniform(32, 16.0, 32.0, None)
    }
}

impl CrfParams {
    /// `k` label values spaced uniformly over [0, 255].
    pub fn uniform(k: usize, lambda: f64, smooth_trunc: f64, data_trunc: Option<f64>) -> Self {
        let label_values = if k == 1 {
            vec![127.5]
        } else {
            (0..k).map(|i| 255.0 * i as f64 / (k - 1) as f64).collect()
        };
        Self {
            label_values,
            lambda,
            smooth_trunc,
            data_trunc,
        }
    }

    pub fn num_labels(&self) -> usize {
        self.label_values.len()
    }

    pub fn validate(&self) -> Result<(), GraphCutError> {
        let bad = |m: String| Err(GraphCutError::BadParams(m));
        if self.label_values.is_empty() {
            return bad("no labels".into());
        }
        if self.label_values.windows(2).any(|w| !(w[0] < w[1])) {
            return bad("label_values must be strictly increasing".into());
        }
        if self.label_values.iter().any(|v| !v.is_finite()) {
            return bad("label_values must be finite".into());
        }
        if let Some(t) = self.data_trunc {
            if !(t > 0.0) {
                return bad(format!("data_trunc must be positive, got {t}"));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn data_cost(&self, label: usize, intensity: f64) -> f64 {
        let d = self.label_values[label] - intensity;
        let sq = d * d;
        match self.data_trunc {
            Some(t) => sq.min(t),
            None => sq,
        }
    }

    #[inline]
    pub fn smooth_cost(&self, a: usize, b: usize) -> f64 {
        self.lambda * (self.label_values[a] - self.label_values[b]).abs().min(self.smooth_trunc)
    }

    /// Checks that `V` is a metric on the label set (needed by expansion moves).
    pub fn check_metric(&self) -> Result<(), GraphCutError> {
        if !(self.lambda >= 0.0) || !(self.smooth_trunc > 0.0) {
            return Err(GraphCutError::NonMetricSmoothness(format!(
                "lambda {} and smooth_trunc {} must be >= 0 and > 0",
                self.lambda, self.smooth_trunc
            )));
        }
        let k = self.num_labels();
        // Tolerance absorbs rounding in the subtractions.
        let tol = 1e-9 * self.lambda.max(1.0) * self.smooth_trunc.max(1.0);
        for a in 0..k {
            for b in 0..k {
                let ab = self.smooth_cost(a, b);
                if (ab - self.smooth_cost(b, a)).abs() > tol || (a == b && ab != 0.0) {
                    return Err(GraphCutError::NonMetricSmoothness(format!(
                        "V({a},{b}) is not symmetric or not zero on the diagonal"
                    )));
                }
                for c in 0..k {
                    if ab > self.smooth_cost(a, c) + self.smooth_cost(c, b) + tol {
                        return Err(GraphCutError::NonMetricSmoothness(format!(
                            "triangle inequality fails for labels ({a},{c},{b})"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Index of the label value closest to `v` (lower index on ties).
    pub fn nearest_label(&self, v: f64) -> usize {
        let mut best = 0;
        for (i, &lv) in self.label_values.iter().enumerate() {
            if (lv - v).abs() < (self.label_values[best] - v).abs() {
                best = i;
            }
        }
        best
    }
}

/// Per-pixel label indices, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Labeling {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<usize>,
}

impl Labeling {
    pub fn constant(width: usize, height: usize, label: usize) -> Self {
        Self {
            width,
            height,
            labels: vec![label; width * height],
        }
    }

    pub fn new(width: usize, height: usize, labels: Vec<usize>) -> Self {
        assert_eq!(labels.len(), width * height);
        Self {
            width,
            height,
            labels,
        }
    }

    pub fn nearest(image: &Tensor, p: &CrfParams) -> Self {
        let (h, w) = (image.shape()[0], image.shape()[1]);
        Self::new(w, h, image.data().iter().map(|&v| p.nearest_label(v)).collect())
    }

    /// Label values as an `[H, W]` image.
    pub fn to_image(&self, p: &CrfParams) -> Tensor {
        Tensor::from_vec(
            &[self.height, self.width],
            self.labels.iter().map(|&l| p.label_values[l]).collect(),
        )
        .expect("labeling dimensions")
    }

    /// 4-neighbour pairs `(p, q)` with `q` right of or below `p`, in row-major order.
    pub fn neighbor_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let (w, h) = (self.width, self.height);
        (0..w * h).flat_map(move |p| {
            let (r, c) = (p / w, p % w);
            let right = (c + 1 < w).then_some((p, p + 1));
            let down = (r + 1 < h).then_some((p, p + w));
            right.into_iter().chain(down)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Energy {
    pub total: f64,
    pub data: f64,
    pub smooth: f64,
}

pub(crate) fn check_dims(f: &Labeling, image: &Tensor, p: &CrfParams) -> Result<(), GraphCutError> {
    let s = image.shape();
    if s.len() != 2 || s[0] != f.height || s[1] != f.width {
        return Err(GraphCutError::DimensionMismatch {
            labeling: (f.height, f.width),
            image: s.to_vec(),
        });
    }
    if let Some(&bad) = f.labels.iter().find(|&&l| l >= p.num_labels()) {
        return Err(GraphCutError::BadParams(format!(
            "label {bad} out of range for {} labels",
            p.num_labels()
        )));
    }
    Ok(())
}

pub fn energy(f: &Labeling, image: &Tensor, p: &CrfParams) -> Result<Energy, GraphCutError> {
    energy_counted(f, image, p, &mut OpCounter::default())
}

pub fn energy_counted(
    f: &Labeling,
    image: &Tensor,
    p: &CrfParams,
    ops: &mut OpCounter,
) -> Result<Energy, GraphCutError> {
    check_dims(f, image, p)?;
    let data: f64 = f
        .labels
        .iter()
        .zip(image.data())
        .map(|(&l, &v)| p.data_cost(l, v))
        .sum();
    let mut pairs = 0u64;
    let smooth: f64 = f
        .neighbor_pairs()
        .map(|(a, b)| {
            pairs += 1;
            p.smooth_cost(f.labels[a], f.labels[b])
        })
        .sum();
    // Data: subtract, square, accumulate. Smoothness: subtract, scale, accumulate.
    ops.add(3 * f.labels.len() as u64 + 3 * pairs + 1);
    Ok(Energy {
        total: data + smooth,
        data,
        smooth,
    })
}
