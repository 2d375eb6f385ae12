//! Run an experiment config through the harness and print where the result
//! bundle went. Defaults to the bundled blobs config.
//!
//!     cargo run --example run_config [path/to/config.toml] [out-dir]

use std::path::PathBuf;

use clc::harness::run_experiment;

fn main() {
    let mut args = std::env::args().skip(1);
    let config = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/configs/clc_blobs.toml"));
    let out = args.next().map(PathBuf::from);
    match run_experiment(&config, out.as_deref(), None) {
        Ok(report) => {
            let s = &report.summary;
            println!("{} on {} samples, gamma {:.4}", s.method.name(), s.n_train, s.gamma);
            println!("last-{} test accuracy {:.4}", s.summary.last_k, s.summary.mean_test_accuracy);
            println!("wrote metrics.csv, summary.json, transition.json to {}", report.out_dir.display());
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code().into());
        }
    }
}
