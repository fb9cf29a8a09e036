//! SSIM and PSNR of a synthetic image under increasing noise.

use pipeboot::data::{add_gaussian_noise, synth_shapes};
use pipeboot::metrics::{psnr, ssim, SsimConfig};
use pipeboot::Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = Rng::new(1);
    let clean = synth_shapes(1, 64, 5, &mut rng)?.remove(0);
    let cfg = SsimConfig::default();
    for sigma in [0.0, 5.0, 10.0, 20.0, 40.0, 80.0] {
        let noisy = add_gaussian_noise(&clean, sigma, &mut rng)?;
        println!(
            "sigma {sigma:>4}: ssim {:.4}  psnr {:.2} dB",
            ssim(&noisy, &clean, &cfg)?,
            psnr(&noisy, &clean, 255.0)?
        );
    }
    Ok(())
}
