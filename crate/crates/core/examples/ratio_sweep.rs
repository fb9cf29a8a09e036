//! Ground-truth ratio sweep: networks trained on the scarce ground truth
//! alone against the same networks trained on a fixed-size mix of ground
//! truth and pipeline labels.
//!
//! `cargo run --release --example ratio_sweep -- denoise 0`

use std::time::Instant;

use pipeboot::bootstrap::{run_ratio_sweep, ExperimentConfig, Mode, Task};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let task = match args.next().as_deref() {
        Some("classify") => Task::Classify,
        _ => Task::Denoise,
    };
    let mut cfg = ExperimentConfig::new(task, Mode::Sweep);
    if let Some(seed) = args.next() {
        cfg.seed = seed.parse()?;
    }
    let start = Instant::now();
    let result = run_ratio_sweep(&cfg, task)?;
    print!("{}", result.to_csv());
    eprintln!("elapsed {:.1?}", start.elapsed());
    Ok(())
}
