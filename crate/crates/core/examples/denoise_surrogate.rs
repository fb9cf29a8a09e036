//! Noisy input vs. the CRF pipeline vs. skip autoencoders
//! trained only on the pipeline's outputs.

use std::time::Instant;

use pipeboot::bootstrap::{run_denoise_experiment, ExperimentConfig, Mode, Task};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = ExperimentConfig::new(Task::Denoise, Mode::Experiment);
    if let Some(seed) = std::env::args().nth(1) {
        cfg.seed = seed.parse()?;
    }
    let start = Instant::now();
    let result = run_denoise_experiment(&cfg)?;
    for r in &result.rows {
        println!("{:<14} ssim={:.4} flops={}", r.method, r.value, r.flops);
    }
    eprintln!("elapsed {:.1?}", start.elapsed());
    Ok(())
}
