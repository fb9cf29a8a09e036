//! Image quality, classification accuracy, and cost reporting.

mod report;
mod ssim;
mod svg;

pub use report::{flops_report, parse_report, MetricName, MetricRow, CSV_HEADER};
pub use ssim::{ssim, SsimConfig};
pub use svg::plot_svg;

use thiserror::Error;

use crate::tensor::{ShapeError, Tensor};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error("image {height}x{width} smaller than the {window}x{window} window")]
    TooSmall {
        height: usize,
        width: usize,
        window: usize,
    },
    #[error("no predictions to score")]
    EmptyInput,
    #[error("{predictions} predictions for {labels} labels")]
    LengthMismatch { predictions: usize, labels: usize },
    #[error("report CSV: {0}")]
    Csv(String),
}

/// Peak signal-to-noise ratio in dB; `+inf` for identical images.
pub fn psnr(a: &Tensor, b: &Tensor, peak: f64) -> Result<f64, MetricsError> {
    a.ensure_same_shape(b, "psnr operands")?;
    let mse = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / a.len().max(1) as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

pub fn accuracy(predictions: &[usize], labels: &[usize]) -> Result<f64, MetricsError> {
    if predictions.len() != labels.len() {
        return Err(MetricsError::LengthMismatch {
            predictions: predictions.len(),
            labels: labels.len(),
        });
    }
    if predictions.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let hits = predictions.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(hits as f64 / labels.len() as f64)
}

/// Mean SSIM over paired image lists, summed in list order.
pub fn mean_ssim(a: &[Tensor], b: &[Tensor], cfg: &SsimConfig) -> Result<f64, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::LengthMismatch {
            predictions: a.len(),
            labels: b.len(),
        });
    }
    if a.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut total = 0.0;
    for (x, y) in a.iter().zip(b) {
        total += ssim(x, y, cfg)?;
    }
    Ok(total / a.len() as f64)
}
