//! Train CLC and Standard on Gaussian blobs with 50% symmetric label noise and
//! print their test-accuracy curves side by side.
//!
//!     cargo run --example clc_blobs

use clc::data::{gen_gaussian_blobs, train_test_split};
use clc::noise::{inject_noise, NoiseKind, NoiseSpec};
use clc::rng::streams;
use clc::train::{train_clc, train_standard, BaselineConfig, ClcConfig, TrainSettings};
use clc::{SeededRng, TransitionMatrix};

fn main() -> clc::Result<()> {
    let seed = 5;
    let full = gen_gaussian_blobs(5, 300, 8, 3.0, &mut SeededRng::new(seed, streams::DATA))?;
    let (train, test) = train_test_split(&full, 0.2, &mut SeededRng::new(seed, streams::SPLIT))?;
    let t = TransitionMatrix::build(&NoiseSpec::new(NoiseKind::Symmetric, 0.5, seed), 5)?;
    let noisy = inject_noise(train.clean_labels(), &t, &mut SeededRng::new(seed, streams::NOISE))?;
    let train = train.with_noisy_labels(noisy)?;
    println!("{} training samples, {:.1}% of labels corrupted", train.len(), 100.0 * train.noise_rate());

    let settings = TrainSettings {
        hidden: vec![128, 128],
        epochs: 60,
        warm_up_epochs: 5,
        batch_size: 64,
        seed,
        ..TrainSettings::default()
    };
    let clc = train_clc(&train, &test, &ClcConfig { train: settings.clone(), ..ClcConfig::default() })?;
    let std = train_standard(&train, &test, &BaselineConfig { train: settings, ..BaselineConfig::default() })?;

    println!("auto gamma after warm-up: {:.4}", clc.gamma);
    println!("epoch  standard  clc     clc supervision precision");
    for (s, c) in std.history.iter().zip(&clc.history).filter(|(s, _)| s.epoch % 5 == 0) {
        println!(
            "{:>5}  {:.4}    {:.4}  {:.4}",
            s.epoch,
            s.test_accuracy,
            c.test_accuracy,
            c.supervision_precision.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
