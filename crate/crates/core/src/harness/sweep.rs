use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::run::run_config;
use super::HarnessError;
use crate::error::Error;

/// One line of `comparison.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub config: String,
    pub method: String,
    /// `<noise kind>-<ratio>`.
    pub setting: String,
    pub seed: u64,
    pub gamma: f64,
    pub mean_test_accuracy: f64,
    pub mean_supervision_precision: Option<f64>,
    pub mean_n_selected: f64,
    pub peak_test_accuracy: f64,
    pub final_test_accuracy: f64,
}

/// Run every `*.toml` in `config_dir` (in parallel, each into
/// `out_dir/<file stem>/`) and write `out_dir/comparison.csv`. Rows are
/// ordered by config file name.
pub fn sweep(config_dir: &Path, out_dir: &Path) -> Result<Vec<SweepRow>, HarnessError> {
    let entries = fs::read_dir(config_dir)
        .map_err(|e| HarnessError::Config(Error::io(format!("reading {}", config_dir.display()), e)))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "toml"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(HarnessError::Config(Error::Config(format!(
            "no .toml configs in {}",
            config_dir.display()
        ))));
    }
    // Parse everything up front so a typo fails the sweep before any training.
    let configs = paths
        .iter()
        .map(|p| ExperimentConfig::load(p).map(|c| (p, c)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(HarnessError::Config)?;

    let rows = configs
        .par_iter()
        .map(|(path, cfg)| {
            let stem = path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
            let report = run_config(cfg, path.parent().unwrap_or(Path::new(".")), &out_dir.join(&stem))?;
            let s = &report.summary.summary;
            Ok(SweepRow {
                config: stem,
                method: cfg.method.name().to_owned(),
                setting: format!("{}-{}", noise_name(cfg), cfg.noise.ratio),
                seed: cfg.train.seed,
                gamma: report.summary.gamma,
                mean_test_accuracy: s.mean_test_accuracy,
                mean_supervision_precision: s.mean_supervision_precision,
                mean_n_selected: s.mean_n_selected,
                peak_test_accuracy: s.peak_test_accuracy,
                final_test_accuracy: s.final_test_accuracy,
            })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;

    let file = fs::File::create(out_dir.join("comparison.csv"))
        .map_err(|e| HarnessError::Output(Error::io(format!("creating comparison.csv in {}", out_dir.display()), e)))?;
    write_comparison_csv(file, &rows).map_err(HarnessError::Output)?;
    Ok(rows)
}

fn noise_name(cfg: &ExperimentConfig) -> String {
    serde_json::to_value(cfg.noise.kind)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}

pub fn write_comparison_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<(), Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "config",
        "method",
        "setting",
        "seed",
        "gamma",
        "mean_test_accuracy",
        "mean_supervision_precision",
        "mean_n_selected",
        "peak_test_accuracy",
        "final_test_accuracy",
    ])
    .map_err(|e| Error::Output(e.to_string()))?;
    let real = |v: f64| format!("{v:.6}");
    for r in rows {
        w.write_record([
            r.config.clone(),
            r.method.clone(),
            r.setting.clone(),
            r.seed.to_string(),
            real(r.gamma),
            real(r.mean_test_accuracy),
            r.mean_supervision_precision.map(real).unwrap_or_default(),
            real(r.mean_n_selected),
            real(r.peak_test_accuracy),
            real(r.final_test_accuracy),
        ])
        .map_err(|e| Error::Output(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Output(e.to_string()))
}
