//! Teacher/student run on the synthetic bar-orientation task: the pipeline
//! classifier is fit on one half of the training data, labels the other half,
//! and a student learns from those labels alone.

use std::time::Instant;

use pipeboot::bootstrap::{run_classify_experiment, ExperimentConfig, Mode, Task};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = ExperimentConfig::new(Task::Classify, Mode::Experiment);
    if let Some(seed) = std::env::args().nth(1) {
        cfg.seed = seed.parse()?;
    }
    let start = Instant::now();
    let result = run_classify_experiment(&cfg)?;
    for r in &result.rows {
        println!("{:<15} accuracy={:.4} flops={}", r.method, r.value, r.flops);
    }
    eprintln!("elapsed {:.1?}", start.elapsed());
    Ok(())
}
