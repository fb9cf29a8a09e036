//! Write a small synthetic clean/noisy corpus as PGM files and read it back.
//!
//! `cargo run --release --example synth_corpus -- /tmp/corpus`

use std::path::PathBuf;

use pipeboot::data::{add_gaussian_noise, load_pgm, save_pgm, synth_shapes};
use pipeboot::Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args()
        .nth(1)
        .map_or_else(|| std::env::temp_dir().join("pipeboot-corpus"), PathBuf::from);
    std::fs::create_dir_all(&dir)?;
    let mut rng = Rng::new(2);
    let clean = synth_shapes(4, 32, 4, &mut rng)?;
    for (i, c) in clean.iter().enumerate() {
        let noisy = add_gaussian_noise(c, 20.0, &mut rng)?;
        let (cp, np) = (dir.join(format!("clean_{i:04}.pgm")), dir.join(format!("noisy_{i:04}.pgm")));
        save_pgm(&cp, c)?;
        save_pgm(&np, &noisy)?;
        assert_eq!(&load_pgm(&cp)?, c);
        println!("{} {}", cp.display(), np.display());
    }
    Ok(())
}
