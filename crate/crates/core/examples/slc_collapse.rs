//! Compare single-network self-correction (SLC) with the collaborative
//! version: SLC confirms its own mistakes, so its supervision precision tends
//! to drift down while CLC's holds.
//!
//!     cargo run --example slc_collapse

use clc::data::{gen_gaussian_blobs, train_test_split};
use clc::noise::{inject_noise, NoiseKind, NoiseSpec};
use clc::rng::streams;
use clc::train::{train_clc, train_slc, ClcConfig, TrainSettings};
use clc::{SeededRng, TransitionMatrix};

fn main() -> clc::Result<()> {
    let seed = 8;
    let full = gen_gaussian_blobs(6, 250, 10, 2.5, &mut SeededRng::new(seed, streams::DATA))?;
    let (train, test) = train_test_split(&full, 0.2, &mut SeededRng::new(seed, streams::SPLIT))?;
    let t = TransitionMatrix::build(&NoiseSpec::new(NoiseKind::Symmetric, 0.5, seed), 6)?;
    let noisy = inject_noise(train.clean_labels(), &t, &mut SeededRng::new(seed, streams::NOISE))?;
    let train = train.with_noisy_labels(noisy)?;

    let cfg = ClcConfig {
        train: TrainSettings {
            hidden: vec![128],
            epochs: 50,
            warm_up_epochs: 5,
            batch_size: 64,
            seed,
            ..TrainSettings::default()
        },
        ..ClcConfig::default()
    };
    let slc = train_slc(&train, &test, &cfg)?;
    let clc = train_clc(&train, &test, &cfg)?;
    println!("epoch  slc acc  slc precision   clc acc  clc precision");
    for (s, c) in slc.history.iter().zip(&clc.history).filter(|(s, _)| s.epoch % 5 == 0) {
        println!(
            "{:>5}  {:.4}   {:.4}          {:.4}   {:.4}",
            s.epoch,
            s.test_accuracy,
            s.supervision_precision.unwrap_or(f64::NAN),
            c.test_accuracy,
            c.supervision_precision.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
