//! Per-layer multiply+add counts of the skip autoencoders and the classifier.

use pipeboot::nn::{build_skip_autoencoder, build_target_classifier, ClassifierArch};
use pipeboot::Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = Rng::new(0);
    for depth in [4, 10, 20] {
        let net = build_skip_autoencoder(depth, 16, 1, &mut rng)?;
        let ledger = net.flop_ledger(&[1, 32, 32])?;
        println!("nn-skip-{depth:<3} skips {:?} total {}", net.conv_skip_pairs(), ledger.total());
    }

    let arch = ClassifierArch::default();
    let net = build_target_classifier(&arch, &mut rng)?;
    let ledger = net.flop_ledger(&arch.input_shape)?;
    for (layer, flops) in net.layers().iter().zip(&ledger.per_layer) {
        println!("{:<8} {flops}", layer.kind_name());
    }
    println!("classifier total {} ({} parameters)", ledger.total(), net.param_count());
    Ok(())
}
