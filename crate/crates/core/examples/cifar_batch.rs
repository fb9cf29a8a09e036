//! Class histogram of a CIFAR-10 binary batch.
//!
//! `cargo run --release --example cifar_batch -- data_batch_1.bin`

use pipeboot::data::load_cifar10_batch;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).ok_or("usage: cifar_batch <data_batch.bin>")?;
    let batch = load_cifar10_batch(&path)?;
    let mut counts = [0usize; 10];
    for c in batch.class_labels().unwrap_or_default() {
        counts[c] += 1;
    }
    println!("{} images", batch.len());
    for (class, n) in counts.iter().enumerate() {
        println!("class {class}: {n}");
    }
    Ok(())
}
