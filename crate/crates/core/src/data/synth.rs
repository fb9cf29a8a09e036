//! Desk-scale synthetic corpora.

use super::{DataError, Dataset, DatasetRole, LabeledExample, Target};
use crate::rng::Rng;
use crate::tensor::Tensor;

/// Grid the shape intensities are drawn from.
const LEVEL_GRID: [f64; 16] = [
    0.0, 17.0, 34.0, 51.0, 68.0, 85.0, 102.0, 119.0, 136.0, 153.0, 170.0, 187.0, 204.0, 221.0,
    238.0, 255.0,
];

/// Piecewise-constant `[size, size]` images of overlapping rectangles and discs.
///
/// Each image picks `num_levels` distinct intensities from a 16-step grid over
/// [0, 255]; the background and every shape take one of those intensities.
pub fn synth_shapes(
    count: usize,
    size: usize,
    num_levels: usize,
    rng: &mut Rng,
) -> Result<Vec<Tensor>, DataError> {
    if size < 8 {
        return Err(DataError::BadParams(format!("size {size} < 8")));
    }
    if !(2..=LEVEL_GRID.len()).contains(&num_levels) {
        return Err(DataError::BadParams(format!(
            "num_levels {num_levels} outside 2..={}",
            LEVEL_GRID.len()
        )));
    }
    let mut images = Vec::with_capacity(count);
    for _ in 0..count {
        let mut grid = LEVEL_GRID.to_vec();
        rng.shuffle(&mut grid);
        let levels = &grid[..num_levels];
        let mut img = Tensor::full(&[size, size], levels[0]);
        let shapes = 3 + rng.below(4);
        for s in 0..shapes {
            // Cycle through the levels so every chosen value tends to appear.
            let level = levels[(s + 1) % num_levels];
            let sz = size as f64;
            let data = img.data_mut();
            if rng.uniform() < 0.5 {
                let (w, h) = (
                    rng.uniform_range(0.2 * sz, 0.6 * sz),
                    rng.uniform_range(0.2 * sz, 0.6 * sz),
                );
                let x0 = rng.uniform_range(-0.1 * sz, sz - 0.5 * w);
                let y0 = rng.uniform_range(-0.1 * sz, sz - 0.5 * h);
                for r in 0..size {
                    for c in 0..size {
                        let (x, y) = (c as f64 + 0.5, r as f64 + 0.5);
                        if x >= x0 && x < x0 + w && y >= y0 && y < y0 + h {
                            data[r * size + c] = level;
                        }
                    }
                }
            } else {
                let radius = rng.uniform_range(0.12 * sz, 0.3 * sz);
                let cx = rng.uniform_range(0.0, sz);
                let cy = rng.uniform_range(0.0, sz);
                for r in 0..size {
                    for c in 0..size {
                        let (dx, dy) = (c as f64 + 0.5 - cx, r as f64 + 0.5 - cy);
                        if dx * dx + dy * dy <= radius * radius {
                            data[r * size + c] = level;
                        }
                    }
                }
            }
        }
        images.push(img);
    }
    Ok(images)
}

const BAR_BACKGROUND: f64 = 50.0;
const BAR_FOREGROUND: f64 = 190.0;
const BAR_NOISE_SIGMA: f64 = 30.0;

/// Balanced oriented-bar classification set of `[1, size, size]` images.
///
/// Class `c` draws a bar at angle `pi * c / num_classes` through a random
/// centre, over a flat background with additive Gaussian noise. Position and
/// length vary per example, so classes are not linearly separable in pixel
/// space. Labels are ground truth.
pub fn synth_classification(
    count: usize,
    num_classes: usize,
    size: usize,
    rng: &mut Rng,
) -> Result<Dataset, DataError> {
    if num_classes < 2 {
        return Err(DataError::BadParams(format!("num_classes {num_classes} < 2")));
    }
    if size < 8 {
        return Err(DataError::BadParams(format!("size {size} < 8")));
    }
    let mut classes: Vec<usize> = (0..count).map(|i| i % num_classes).collect();
    rng.shuffle(&mut classes);
    let sz = size as f64;
    let examples = classes
        .into_iter()
        .map(|class| {
            let theta = std::f64::consts::PI * class as f64 / num_classes as f64;
            let (dx, dy) = (theta.cos(), theta.sin());
            let cx = rng.uniform_range(0.3 * sz, 0.7 * sz);
            let cy = rng.uniform_range(0.3 * sz, 0.7 * sz);
            let half = rng.uniform_range(0.25 * sz, 0.4 * sz);
            let mut img = Tensor::zeros(&[1, size, size]);
            for (i, v) in img.data_mut().iter_mut().enumerate() {
                let (px, py) = ((i % size) as f64 + 0.5 - cx, (i / size) as f64 + 0.5 - cy);
                let along = px * dx + py * dy;
                let across = (px * -dy + py * dx).abs();
                let on_bar = along.abs() <= half && across <= 0.9;
                let base = if on_bar { BAR_FOREGROUND } else { BAR_BACKGROUND };
                *v = (base + BAR_NOISE_SIGMA * rng.normal()).clamp(0.0, 255.0);
            }
            LabeledExample::ground_truth(img, Target::Class(class))
        })
        .collect();
    Dataset::new(DatasetRole::GroundTruth, examples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn shapes_use_chosen_levels() {
        let imgs = synth_shapes(5, 16, 2, &mut Rng::new(4)).unwrap();
        for img in &imgs {
            let distinct: BTreeSet<u64> = img.data().iter().map(|v| v.to_bits()).collect();
            assert!(distinct.len() <= 2);
            assert!(img.data().iter().all(|v| LEVEL_GRID.contains(v)));
        }
    }

    #[test]
    fn shapes_deterministic_and_validated() {
        let a = synth_shapes(3, 16, 4, &mut Rng::new(8)).unwrap();
        let b = synth_shapes(3, 16, 4, &mut Rng::new(8)).unwrap();
        assert_eq!(a, b);
        assert!(synth_shapes(1, 16, 1, &mut Rng::new(0)).is_err());
        assert!(synth_shapes(1, 7, 2, &mut Rng::new(0)).is_err());
    }

    #[test]
    fn classification_balanced() {
        let d = synth_classification(10, 2, 12, &mut Rng::new(1)).unwrap();
        let labels = d.class_labels().unwrap();
        assert_eq!(labels.iter().filter(|&&c| c == 0).count(), 5);
        assert_eq!(d.examples()[0].input.shape(), &[1, 12, 12]);
        let again = synth_classification(10, 2, 12, &mut Rng::new(1)).unwrap();
        assert_eq!(d, again);
        assert!(synth_classification(10, 1, 12, &mut Rng::new(1)).is_err());
    }
}
