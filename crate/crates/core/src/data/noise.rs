use super::DataError;
use crate::rng::Rng;
use crate::tensor::Tensor;

/// Adds independent N(0, sigma^2) noise to every pixel, then clamps to [0, 255].
pub fn add_gaussian_noise(image: &Tensor, sigma: f64, rng: &mut Rng) -> Result<Tensor, DataError> {
    if !(sigma >= 0.0) {
        return Err(DataError::NegativeSigma(sigma));
    }
    Ok(image.map(|v| (v + sigma * rng.normal()).clamp(0.0, 255.0)))
}

/// Draws `count` square patches from `[H, W]` images. Each draw picks an
/// image index, then a row, then a column, uniformly from `rng`.
pub fn sample_patches(
    images: &[Tensor],
    patch: usize,
    count: usize,
    rng: &mut Rng,
) -> Result<Vec<Tensor>, DataError> {
    for (index, img) in images.iter().enumerate() {
        let s = img.shape();
        if s.len() != 2 || s[0] < patch || s[1] < patch || patch == 0 {
            return Err(DataError::PatchTooLarge {
                patch,
                index,
                shape: s.to_vec(),
            });
        }
    }
    if count > 0 && images.is_empty() {
        return Err(DataError::BadParams("no images to sample from".into()));
    }
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let img = &images[rng.below(images.len())];
        let (h, w) = (img.shape()[0], img.shape()[1]);
        let top = rng.below(h - patch + 1);
        let left = rng.below(w - patch + 1);
        let data = (0..patch)
            .flat_map(|r| {
                let start = (top + r) * w + left;
                img.data()[start..start + patch].iter().copied()
            })
            .collect();
        out.push(Tensor::from_vec(&[patch, patch], data).expect("patch size"));
    }
    Ok(out)
}
