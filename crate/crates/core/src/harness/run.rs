use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{DatasetConfig, ExperimentConfig, Method};
use super::HarnessError;
use crate::data::{gen_gaussian_blobs, gen_rings, load_idx, train_test_split, LabeledDataset};
use crate::error::Error;
use crate::metrics::{summarize, write_metrics_csv, Summary};
use crate::noise::{inject_noise, ConfusionMatrix, TransitionMatrix};
use crate::rng::{streams, SeededRng};
use crate::train::{
    train_bootstrap, train_clc, train_codistillation, train_coteaching, train_decouple, train_forward,
    train_self_paced, train_slc, train_standard, TrainOutcome,
};

/// Train/test split with noise injected into the training labels only.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
    pub transition: TransitionMatrix,
}

/// Build the dataset described by `cfg`. Relative IDX paths resolve against
/// `base_dir`.
pub fn prepare_data(cfg: &ExperimentConfig, base_dir: &Path) -> Result<PreparedData, HarnessError> {
    let seed = cfg.train.seed;
    let full = match &cfg.dataset {
        DatasetConfig::Blobs {
            classes,
            n_per_class,
            dim,
            separation,
            ..
        } => gen_gaussian_blobs(*classes, *n_per_class, *dim, *separation, &mut SeededRng::new(seed, streams::DATA))
            .map_err(HarnessError::Config)?,
        DatasetConfig::Rings {
            classes,
            n_per_class,
            noise_std,
            ..
        } => gen_rings(*classes, *n_per_class, *noise_std, &mut SeededRng::new(seed, streams::DATA))
            .map_err(HarnessError::Config)?,
        DatasetConfig::Idx {
            images, labels, max_n, ..
        } => load_idx(&base_dir.join(images), &base_dir.join(labels), *max_n).map_err(HarnessError::Dataset)?,
    };
    let (train, test) = train_test_split(&full, cfg.dataset.test_fraction(), &mut SeededRng::new(seed, streams::SPLIT))
        .map_err(HarnessError::Config)?;

    let spec = cfg.noise_spec();
    let transition = TransitionMatrix::build(&spec, train.classes()).map_err(HarnessError::Config)?;
    let noisy = inject_noise(train.clean_labels(), &transition, &mut SeededRng::new(spec.seed, streams::NOISE))
        .map_err(HarnessError::Training)?;
    let train = train.with_noisy_labels(noisy).map_err(HarnessError::Training)?;
    Ok(PreparedData { train, test, transition })
}

/// Train the configured method on prepared data.
pub fn train_method(cfg: &ExperimentConfig, data: &PreparedData) -> Result<TrainOutcome, HarnessError> {
    let (train, test) = (&data.train, &data.test);
    let outcome = match cfg.method {
        Method::Clc => train_clc(train, test, &cfg.clc_config()),
        Method::Slc => train_slc(train, test, &cfg.clc_config()),
        Method::Standard => train_standard(train, test, &cfg.baseline_config()),
        Method::Bootstrap => train_bootstrap(train, test, &cfg.baseline_config()),
        Method::Forward => train_forward(train, test, &cfg.baseline_config(), &data.transition),
        Method::Decouple => train_decouple(train, test, &cfg.baseline_config()),
        Method::SelfPaced => train_self_paced(train, test, &cfg.baseline_config()),
        Method::CoTeaching => train_coteaching(train, test, &cfg.baseline_config()),
        Method::CoDistillation => train_codistillation(train, test, &cfg.baseline_config()),
    };
    outcome.map_err(|e| match e {
        Error::Config(_) => HarnessError::Config(e),
        other => HarnessError::Training(other),
    })
}

/// A confusion matrix in counts and row-normalized form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionReport {
    /// What the rows and columns index.
    pub rows: String,
    pub cols: String,
    pub counts: Vec<Vec<u64>>,
    pub normalized: Vec<Vec<f64>>,
}

impl ConfusionReport {
    fn new(rows: &str, cols: &str, m: &ConfusionMatrix) -> Self {
        Self {
            rows: rows.to_owned(),
            cols: cols.to_owned(),
            counts: m.counts().to_vec(),
            normalized: m.normalized(),
        }
    }
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: ExperimentConfig,
    pub method: Method,
    pub n_train: usize,
    pub n_test: usize,
    pub classes: usize,
    /// Fraction of training labels actually corrupted.
    pub realized_noise_rate: f64,
    pub gamma: f64,
    pub summary: Summary,
    /// Final training targets against the noisy labels they replaced.
    pub corrected_vs_noisy: ConfusionReport,
    /// Ground truth against the final training targets.
    pub clean_vs_corrected: ConfusionReport,
}

/// Everything a run produced, in memory.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub summary: RunSummary,
    pub outcome: TrainOutcome,
    pub transition: TransitionMatrix,
}

/// Run an already-parsed config and write its result bundle into `out_dir`.
pub fn run_config(cfg: &ExperimentConfig, base_dir: &Path, out_dir: &Path) -> Result<RunReport, HarnessError> {
    let data = prepare_data(cfg, base_dir)?;
    let outcome = train_method(cfg, &data)?;
    let summary = build_summary(cfg, &data, &outcome)?;
    write_bundle(out_dir, cfg, &summary, &outcome, &data.transition)?;
    Ok(RunReport {
        out_dir: out_dir.to_path_buf(),
        summary,
        outcome,
        transition: data.transition,
    })
}

/// Load `config_path`, apply the optional overrides and run it. Without
/// `out_override` the config's `output.dir` is used (relative to the config
/// file).
pub fn run_experiment(
    config_path: &Path,
    out_override: Option<&Path>,
    seed_override: Option<u64>,
) -> Result<RunReport, HarnessError> {
    let mut cfg = ExperimentConfig::load(config_path).map_err(HarnessError::Config)?;
    if let Some(seed) = seed_override {
        cfg.train.seed = seed;
    }
    let base_dir = config_path.parent().unwrap_or(Path::new("."));
    let out_dir = match (out_override, &cfg.output.dir) {
        (Some(dir), _) => dir.to_path_buf(),
        (None, Some(dir)) => base_dir.join(dir),
        (None, None) => {
            return Err(HarnessError::Config(Error::Config(
                "no output directory: set output.dir or pass --out".into(),
            )))
        }
    };
    run_config(&cfg, base_dir, &out_dir)
}

fn build_summary(cfg: &ExperimentConfig, data: &PreparedData, outcome: &TrainOutcome) -> Result<RunSummary, HarnessError> {
    let train = &data.train;
    let c = train.classes();
    let summary = summarize(&outcome.history, cfg.train.last_k).map_err(HarnessError::Training)?;
    let vs_noisy = ConfusionMatrix::new(&outcome.final_targets, train.noisy_labels(), c).map_err(HarnessError::Training)?;
    let vs_clean = ConfusionMatrix::new(train.clean_labels(), &outcome.final_targets, c).map_err(HarnessError::Training)?;
    Ok(RunSummary {
        config: cfg.clone(),
        method: cfg.method,
        n_train: train.len(),
        n_test: data.test.len(),
        classes: c,
        realized_noise_rate: train.noise_rate(),
        gamma: outcome.gamma,
        summary,
        corrected_vs_noisy: ConfusionReport::new("corrected", "noisy", &vs_noisy),
        clean_vs_corrected: ConfusionReport::new("clean", "corrected", &vs_clean),
    })
}

fn write_bundle(
    out_dir: &Path,
    cfg: &ExperimentConfig,
    summary: &RunSummary,
    outcome: &TrainOutcome,
    transition: &TransitionMatrix,
) -> Result<(), HarnessError> {
    let out = |e: Error| HarnessError::Output(e);
    let io = |what: &str, e: std::io::Error| HarnessError::Output(Error::io(format!("{what} in {}", out_dir.display()), e));

    fs::create_dir_all(out_dir).map_err(|e| io("creating output directory", e))?;
    let file = fs::File::create(out_dir.join("metrics.csv")).map_err(|e| io("creating metrics.csv", e))?;
    write_metrics_csv(BufWriter::new(file), cfg.method.schema(), &outcome.history).map_err(out)?;

    let json = serde_json::to_string_pretty(summary).map_err(|e| out(Error::Output(e.to_string())))?;
    fs::write(out_dir.join("summary.json"), json + "\n").map_err(|e| io("writing summary.json", e))?;
    let json = serde_json::to_string_pretty(transition).map_err(|e| out(Error::Output(e.to_string())))?;
    fs::write(out_dir.join("transition.json"), json + "\n").map_err(|e| io("writing transition.json", e))?;
    Ok(())
}
