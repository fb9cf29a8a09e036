//! Per-move energy of an alpha-expansion run. The trace never goes up.

use pipeboot::data::{add_gaussian_noise, synth_shapes};
use pipeboot::graphcut::{alpha_expansion, CrfParams, Labeling};
use pipeboot::Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = Rng::new(3);
    let clean = synth_shapes(1, 32, 3, &mut rng)?.remove(0);
    let noisy = add_gaussian_noise(&clean, 25.0, &mut rng)?;
    let p = CrfParams::uniform(8, 16.0, 32.0, None);
    let run = alpha_expansion(&noisy, &p, &Labeling::nearest(&noisy, &p))?;
    for (step, e) in run.energy_trace.iter().enumerate() {
        let alpha = step.checked_sub(1).map(|s| s % p.num_labels());
        match alpha {
            Some(a) => println!("cycle {} alpha {a}: {e:.1}", (step - 1) / p.num_labels() + 1),
            None => println!("initial: {e:.1}"),
        }
    }
    println!("{} cycles, {} ops", run.cycles, run.ops);
    Ok(())
}
