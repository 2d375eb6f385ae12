//! Split a batch of predictions into low- and high-entropy sets and show the
//! supervision target each sample would receive.
//!
//!     cargo run --example entropy_partition

use clc::math::{shannon_entropy_rows, softmax_rows};
use clc::select::{estimate_gamma, partition_by_entropy};
use clc::{Matrix, MlpNetwork, SeededRng};

fn main() -> clc::Result<()> {
    let logits = Matrix::from_rows(&[
        vec![6.0, 0.0, 0.0],
        vec![2.0, 1.5, 0.0],
        vec![0.1, 0.0, 0.2],
        vec![0.0, 4.0, 1.0],
    ])?;
    let probs = softmax_rows(&logits)?;
    let noisy = Matrix::one_hot(&[0, 2, 1, 0], 3)?;
    let entropies = shannon_entropy_rows(&probs)?;

    let gamma = 0.6;
    let part = partition_by_entropy(&probs, &noisy, gamma)?;
    println!("gamma = {gamma} nats (ln 3 = {:.4})", 3f64.ln());
    for (k, h) in entropies.iter().enumerate() {
        let side = if part.low_indices().contains(&k) { "low  -> pseudo-label" } else { "high -> noisy label " };
        println!("  row {k}: H = {h:.4}  {side}  probs {:.3?}", probs.row(k));
    }
    println!("low targets (soft):");
    for (i, &k) in part.low_indices().iter().enumerate() {
        println!("  row {k}: {:.3?}", part.low_target(i));
    }

    // The automatic threshold is the mean prediction entropy of a network.
    let mut rng = SeededRng::new(0, 1);
    let net = MlpNetwork::init(&[2, 16, 3], &mut rng)?;
    let x = Matrix::new(50, 2, (0..100).map(|_| rng.normal()).collect())?;
    println!("auto gamma of an untrained 2-16-3 network: {:.4}", estimate_gamma(&net, &x)?);
    Ok(())
}
