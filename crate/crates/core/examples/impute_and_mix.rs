//! Label noisy images with the CRF pipeline, then build training sets that
//! mix a fraction of ground truth into the imputed labels.

use pipeboot::bootstrap::{impute_labels, mix_datasets, CrfDenoiser, MixConfig};
use pipeboot::data::{add_gaussian_noise, synth_shapes, Dataset, DatasetRole, LabelSource, LabeledExample, Target};
use pipeboot::graphcut::CrfParams;
use pipeboot::Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = Rng::new(4);
    let clean = synth_shapes(12, 24, 4, &mut rng)?;
    let noisy = clean
        .iter()
        .map(|c| add_gaussian_noise(c, 20.0, &mut rng))
        .collect::<Result<Vec<_>, _>>()?;

    let pipeline = CrfDenoiser::new(CrfParams::default());
    let imputed = impute_labels(&pipeline, &Dataset::unlabeled(noisy.clone()))?;
    println!("imputed {} labels with {} ops", imputed.dataset.len(), imputed.ops);

    let truth = noisy
        .into_iter()
        .zip(clean)
        .map(|(x, y)| LabeledExample::ground_truth(x, Target::Image(y)))
        .collect();
    let truth = Dataset::new(DatasetRole::GroundTruth, truth)?;
    for ratio_x in [0.0, 0.1, 0.5, 1.0] {
        let cfg = MixConfig { ratio_x, total_n: 12, seed: 0 };
        let mixed = mix_datasets(&truth, &imputed.dataset, &cfg)?;
        let gt = mixed
            .examples()
            .iter()
            .filter(|e| e.source() == Some(LabelSource::GroundTruth))
            .count();
        println!("ratio {ratio_x:<4} -> {gt} ground truth + {} imputed", mixed.len() - gt);
    }
    Ok(())
}
