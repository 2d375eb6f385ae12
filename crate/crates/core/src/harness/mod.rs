//! Experiment harness: config-driven runs, result bundles and sweeps.
//!
//! A run writes three files into its output directory:
//!
//! * `metrics.csv` — one row per epoch, see [`crate::metrics::MetricsSchema`];
//! * `summary.json` — config echo, last-k summary, resolved Γ and the
//!   confusion matrices of the final training targets;
//! * `transition.json` — the injected noise transition matrix.

pub mod config;
mod run;
mod sweep;

pub use config::{DatasetConfig, ExperimentConfig, GammaSetting, Method};
pub use run::{prepare_data, run_config, run_experiment, train_method, ConfusionReport, PreparedData, RunReport, RunSummary};
pub use sweep::{sweep, write_comparison_csv, SweepRow};

use thiserror::Error;

use crate::error::Error;

/// Failure of a harness operation, classified by stage so the CLI can map
/// each to its own exit status.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("malformed config: {0}")]
    Config(#[source] Error),
    #[error("dataset load failed: {0}")]
    Dataset(#[source] Error),
    #[error("cannot write output: {0}")]
    Output(#[source] Error),
    #[error("training failed: {0}")]
    Training(#[source] Error),
}

impl HarnessError {
    pub fn exit_code(&self) -> u8 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Output(_) => 3,
            HarnessError::Dataset(_) => 4,
            HarnessError::Training(_) => 5,
        }
    }
}
