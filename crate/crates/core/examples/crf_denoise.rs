//! Denoise one synthetic image with expansion and swap moves and compare them.
//!
//! `cargo run --release --example crf_denoise -- 20`

use pipeboot::data::{add_gaussian_noise, synth_shapes};
use pipeboot::graphcut::{denoise_with, CrfParams, MoveAlgorithm};
use pipeboot::metrics::{ssim, SsimConfig};
use pipeboot::Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sigma: f64 = std::env::args().nth(1).map_or(Ok(20.0), |s| s.parse())?;
    let mut rng = Rng::new(7);
    let clean = synth_shapes(1, 48, 4, &mut rng)?.remove(0);
    let noisy = add_gaussian_noise(&clean, sigma, &mut rng)?;
    let cfg = SsimConfig::default();
    println!("noisy      ssim={:.4}", ssim(&noisy, &clean, &cfg)?);

    let params = CrfParams::default();
    for algorithm in [MoveAlgorithm::Expansion, MoveAlgorithm::Swap] {
        let out = denoise_with(&noisy, &params, algorithm)?;
        println!(
            "{:<10} ssim={:.4} energy={:.0} ops={}",
            format!("{algorithm:?}").to_lowercase(),
            ssim(&out.image, &clean, &cfg)?,
            out.energy.total,
            out.ops
        );
    }
    Ok(())
}
