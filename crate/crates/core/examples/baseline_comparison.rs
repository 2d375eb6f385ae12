//! Run every method on the same noisy problem and print a comparison table of
//! last-10-epoch means.
//!
//!     cargo run --example baseline_comparison [symmetric|pairwise] [ratio]

use clc::harness::{prepare_data, train_method, ExperimentConfig, Method};
use clc::metrics::summarize;

const TEMPLATE: &str = r#"
method = "standard"

[dataset]
kind = "blobs"
classes = 5
n_per_class = 300
dim = 8
separation = 3.0

[noise]
kind = "KIND"
ratio = RATIO

[model]
hidden = [128, 128]

[train]
epochs = 60
warm_up_epochs = 5
batch_size = 64
seed = 5
"#;

fn main() -> clc::Result<()> {
    let mut args = std::env::args().skip(1);
    let kind = args.next().unwrap_or_else(|| "symmetric".into());
    let ratio = args.next().unwrap_or_else(|| "0.5".into());
    let mut cfg = ExperimentConfig::from_toml_str(&TEMPLATE.replace("KIND", &kind).replace("RATIO", &ratio))?;
    let data = prepare_data(&cfg, std::path::Path::new(".")).map_err(|e| clc::Error::Config(e.to_string()))?;
    println!("{kind} noise, r = {ratio}: {:.1}% of training labels corrupted\n", 100.0 * data.train.noise_rate());
    println!("{:<16} {:>10} {:>10} {:>12} {:>10}", "method", "last-10", "peak", "precision", "selected");

    for method in [
        Method::Standard,
        Method::Bootstrap,
        Method::Forward,
        Method::Decouple,
        Method::SelfPaced,
        Method::CoTeaching,
        Method::CoDistillation,
        Method::Slc,
        Method::Clc,
    ] {
        cfg.method = method;
        let out = train_method(&cfg, &data).map_err(|e| clc::Error::Config(e.to_string()))?;
        let s = summarize(&out.history, 10)?;
        println!(
            "{:<16} {:>10.4} {:>10.4} {:>12} {:>10.0}",
            method.name(),
            s.mean_test_accuracy,
            s.peak_test_accuracy,
            s.mean_supervision_precision.map_or("-".into(), |p| format!("{p:.4}")),
            s.mean_n_selected
        );
    }
    Ok(())
}
