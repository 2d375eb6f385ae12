//! CLC against Standard on the bundled 7,000-digit MNIST subset.
//!
//!     cargo run --release --example mnist_subset [epochs]
//!
//! With the default 100 epochs this takes a few minutes on one core.

use std::path::Path;

use clc::harness::{prepare_data, train_method, ExperimentConfig, Method};
use clc::metrics::summarize;

fn main() -> clc::Result<()> {
    let epochs: usize = std::env::args().nth(1).map_or(Ok(100), |a| a.parse()).unwrap_or(100);
    let data_dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist");
    let text = format!(
        r#"
method = "standard"

[dataset]
kind = "idx"
images = "images-idx3-ubyte"
labels = "labels-idx1-ubyte"
test_fraction = {}

[noise]
kind = "symmetric"
ratio = 0.5

[model]
hidden = [256]

[train]
epochs = {epochs}
warm_up_epochs = 9
last_k = {}
hard_pseudo_labels = true
gamma_from_both = true
seed = 1
"#,
        2.0 / 7.0,
        10.min(epochs)
    );
    let mut cfg = ExperimentConfig::from_toml_str(&text)?;
    let data = prepare_data(&cfg, &data_dir).map_err(|e| clc::Error::Config(e.to_string()))?;
    println!("{} train / {} test digits, {:.1}% of training labels corrupted", data.train.len(), data.test.len(), 100.0 * data.train.noise_rate());

    for method in [Method::Standard, Method::Clc] {
        cfg.method = method;
        let out = train_method(&cfg, &data).map_err(|e| clc::Error::Config(e.to_string()))?;
        let s = summarize(&out.history, cfg.train.last_k)?;
        println!(
            "{:<9} last-{} test accuracy {:.4}, peak {:.4} at epoch {}, supervision precision {:.4}",
            method.name(),
            s.last_k,
            s.mean_test_accuracy,
            s.peak_test_accuracy,
            s.peak_epoch,
            s.mean_supervision_precision.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
