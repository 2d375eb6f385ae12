//! Build the three noise transition matrices, corrupt labels with one of them
//! and compare the empirical confusion matrix against it.
//!
//!     cargo run --example noise_injection

use clc::noise::{confusion_matrix, inject_noise, NoiseKind, NoiseSpec};
use clc::{SeededRng, TransitionMatrix};

fn print_rows(title: &str, rows: &[Vec<f64>]) {
    println!("{title}");
    for row in rows {
        println!("  {}", row.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join(" "));
    }
}

fn main() -> clc::Result<()> {
    let c = 5;
    for spec in [
        NoiseSpec::new(NoiseKind::Symmetric, 0.5, 0),
        NoiseSpec::new(NoiseKind::Pairwise, 0.45, 0),
        NoiseSpec::new(NoiseKind::Asymmetric, 0.3, 0).with_pairs(vec![(1, 0), (3, 2)]),
    ] {
        let t = TransitionMatrix::build(&spec, c)?;
        print_rows(&format!("{:?} r={} transition matrix", spec.kind, spec.ratio), t.rows());
    }

    let t = TransitionMatrix::build(&NoiseSpec::new(NoiseKind::Pairwise, 0.45, 0), c)?;
    let clean: Vec<usize> = (0..20_000).map(|i| i % c).collect();
    let noisy = inject_noise(&clean, &t, &mut SeededRng::new(7, clc::rng::streams::NOISE))?;
    let flipped = clean.iter().zip(&noisy).filter(|(a, b)| a != b).count();
    println!("corrupted {flipped} of {} labels ({:.4})", clean.len(), flipped as f64 / clean.len() as f64);
    print_rows("empirical clean -> noisy confusion", &confusion_matrix(&clean, &noisy, c)?.normalized());
    Ok(())
}
