//! Track the mean prediction entropy of correctly and incorrectly classified
//! training samples while a Standard network fits 50% symmetric noise, and
//! the precision of its low-entropy predictions.
//!
//!     cargo run --example memorization_curve

use clc::data::{gen_gaussian_blobs, train_test_split};
use clc::noise::{inject_noise, NoiseKind, NoiseSpec};
use clc::rng::streams;
use clc::train::{train_standard, BaselineConfig, TrainSettings};
use clc::{SeededRng, TransitionMatrix};

fn main() -> clc::Result<()> {
    let seed = 2;
    let full = gen_gaussian_blobs(4, 200, 6, 3.0, &mut SeededRng::new(seed, streams::DATA))?;
    let (train, test) = train_test_split(&full, 0.2, &mut SeededRng::new(seed, streams::SPLIT))?;
    let t = TransitionMatrix::build(&NoiseSpec::new(NoiseKind::Symmetric, 0.5, seed), 4)?;
    let noisy = inject_noise(train.clean_labels(), &t, &mut SeededRng::new(seed, streams::NOISE))?;
    let train = train.with_noisy_labels(noisy)?;

    let cfg = BaselineConfig {
        train: TrainSettings {
            hidden: vec![256, 256],
            epochs: 150,
            warm_up_epochs: 5,
            batch_size: 32,
            seed,
            ..TrainSettings::default()
        },
        ..BaselineConfig::default()
    };
    let out = train_standard(&train, &test, &cfg)?;
    println!("gamma (mean entropy after warm-up): {:.4}", out.gamma);
    println!("epoch  H(correct)  H(incorrect)  fit noisy  test acc  low-entropy precision");
    for m in out.history.iter().filter(|m| m.epoch % 10 == 0 || m.epoch == 1) {
        let opt = |v: Option<f64>| v.map_or("     -".into(), |v| format!("{v:.4}"));
        println!(
            "{:>5}  {}      {}        {:.4}     {:.4}    {}",
            m.epoch,
            opt(m.mean_entropy_correct),
            opt(m.mean_entropy_incorrect),
            m.train_accuracy_noisy,
            m.test_accuracy,
            opt(m.low_entropy_precision)
        );
    }
    Ok(())
}
