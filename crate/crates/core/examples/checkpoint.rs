//! Train a tiny skip autoencoder, save it, load it back, and check the copy
//! predicts identically.

use pipeboot::data::{add_gaussian_noise, synth_shapes, Dataset, DatasetRole, LabeledExample, Target};
use pipeboot::nn::checkpoint::{load_checkpoint, save_checkpoint};
use pipeboot::nn::{build_skip_autoencoder, train, LossKind, SgdConfig};
use pipeboot::Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = Rng::new(5);
    let clean = synth_shapes(16, 16, 3, &mut rng)?;
    let examples = clean
        .iter()
        .map(|c| {
            let noisy = add_gaussian_noise(c, 20.0, &mut rng)?;
            let x = noisy.map(|v| v / 255.0).reshape(&[1, 16, 16])?;
            let y = c.map(|v| v / 255.0).reshape(&[1, 16, 16])?;
            Ok(LabeledExample::ground_truth(x, Target::Image(y)))
        })
        .collect::<Result<Vec<_>, Box<dyn std::error::Error>>>()?;
    let data = Dataset::new(DatasetRole::GroundTruth, examples)?;

    let mut net = build_skip_autoencoder(4, 8, 1, &mut rng)?;
    let cfg = SgdConfig {
        learning_rate: 0.03,
        batch_size: 4,
        epochs: 20,
        ..SgdConfig::default()
    };
    let log = train(&mut net, &data, LossKind::Mse, &cfg)?;
    println!("loss {:.5} -> {:.5}", log.epoch_loss[0], log.final_loss());

    let dir = std::env::temp_dir().join("pipeboot-checkpoint-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("nn-skip-4.pbnn");
    save_checkpoint(&path, &net)?;
    let back = load_checkpoint(&path)?;
    let x = &data.examples()[0].input.clone().reshape(&[1, 1, 16, 16])?;
    assert_eq!(back.forward(x)?, net.forward(x)?);
    println!("saved {} ({} bytes), reload predicts identically", path.display(), std::fs::metadata(&path)?.len());
    Ok(())
}
