//! Experiment configuration (TOML). Unknown keys are rejected everywhere.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::MetricsSchema;
use crate::noise::{NoiseKind, NoiseSpec};
use crate::select::GammaPolicy;
use crate::train::{BaselineConfig, ClcConfig, NetStreams, TrainSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Standard,
    Bootstrap,
    Forward,
    Decouple,
    SelfPaced,
    CoTeaching,
    CoDistillation,
    Slc,
    Clc,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Standard => "standard",
            Method::Bootstrap => "bootstrap",
            Method::Forward => "forward",
            Method::Decouple => "decouple",
            Method::SelfPaced => "self_paced",
            Method::CoTeaching => "co_teaching",
            Method::CoDistillation => "co_distillation",
            Method::Slc => "slc",
            Method::Clc => "clc",
        }
    }

    pub fn schema(self) -> MetricsSchema {
        match self {
            Method::Clc => MetricsSchema::Clc,
            Method::Slc => MetricsSchema::Slc,
            _ => MetricsSchema::Plain,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetConfig {
    Blobs {
        classes: usize,
        n_per_class: usize,
        dim: usize,
        separation: f64,
        #[serde(default = "default_test_fraction")]
        test_fraction: f64,
    },
    Rings {
        classes: usize,
        n_per_class: usize,
        noise_std: f64,
        #[serde(default = "default_test_fraction")]
        test_fraction: f64,
    },
    Idx {
        /// Relative paths resolve against the config file's directory.
        images: PathBuf,
        labels: PathBuf,
        max_n: Option<usize>,
        #[serde(default = "default_test_fraction")]
        test_fraction: f64,
    },
}

fn default_test_fraction() -> f64 {
    0.2
}

impl DatasetConfig {
    pub fn test_fraction(&self) -> f64 {
        match self {
            DatasetConfig::Blobs { test_fraction, .. }
            | DatasetConfig::Rings { test_fraction, .. }
            | DatasetConfig::Idx { test_fraction, .. } => *test_fraction,
        }
    }

    fn default_hidden(&self) -> Vec<usize> {
        match self {
            DatasetConfig::Idx { .. } => vec![256],
            _ => vec![64, 64],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub kind: NoiseKind,
    pub ratio: f64,
    /// `[source, destination]` pairs for asymmetric noise.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pairs: Vec<[usize; 2]>,
    /// Defaults to `train.seed`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            kind: NoiseKind::Symmetric,
            ratio: 0.0,
            pairs: Vec::new(),
            seed: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Hidden widths; defaults to `[64, 64]` for synthetic data and `[256]` for IDX.
    pub hidden: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoGamma {
    Auto,
}

/// `gamma = "auto"` or a number of nats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GammaSetting {
    Auto(AutoGamma),
    Fixed(f64),
}

impl Default for GammaSetting {
    fn default() -> Self {
        GammaSetting::Auto(AutoGamma::Auto)
    }
}

impl GammaSetting {
    pub fn policy(self) -> GammaPolicy {
        match self {
            GammaSetting::Auto(_) => GammaPolicy::Auto,
            GammaSetting::Fixed(v) => GammaPolicy::Fixed(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub warm_up_epochs: usize,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: GammaSetting,
    pub hard_pseudo_labels: bool,
    pub gamma_from_both: bool,
    pub bootstrap_kappa: f64,
    pub codistill_lambda: f64,
    pub schedule_epochs: usize,
    /// Epochs averaged in the summary.
    pub last_k: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 128,
            learning_rate: 1e-3,
            warm_up_epochs: 10,
            alpha: 0.1,
            beta: 0.5,
            gamma: GammaSetting::default(),
            hard_pseudo_labels: false,
            gamma_from_both: false,
            bootstrap_kappa: 0.95,
            codistill_lambda: 1.0,
            schedule_epochs: 10,
            last_k: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub method: Method,
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn hidden(&self) -> Vec<usize> {
        self.model.hidden.clone().unwrap_or_else(|| self.dataset.default_hidden())
    }

    pub fn noise_spec(&self) -> NoiseSpec {
        NoiseSpec::new(self.noise.kind, self.noise.ratio, self.noise.seed.unwrap_or(self.train.seed))
            .with_pairs(self.noise.pairs.iter().map(|p| (p[0], p[1])).collect())
    }

    pub fn settings(&self) -> TrainSettings {
        TrainSettings {
            hidden: self.hidden(),
            epochs: self.train.epochs,
            warm_up_epochs: self.train.warm_up_epochs,
            batch_size: self.train.batch_size,
            learning_rate: self.train.learning_rate,
            seed: self.train.seed,
            streams: NetStreams::default(),
        }
    }

    pub fn clc_config(&self) -> ClcConfig {
        ClcConfig {
            train: self.settings(),
            alpha: self.train.alpha,
            beta: self.train.beta,
            gamma: self.train.gamma.policy(),
            hard_pseudo_labels: self.train.hard_pseudo_labels,
            gamma_from_both: self.train.gamma_from_both,
        }
    }

    pub fn baseline_config(&self) -> BaselineConfig {
        BaselineConfig {
            train: self.settings(),
            bootstrap_kappa: self.train.bootstrap_kappa,
            codistill_lambda: self.train.codistill_lambda,
            noise_ratio: Some(self.noise.ratio),
            schedule_epochs: self.train.schedule_epochs,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let tf = self.dataset.test_fraction();
        if !(tf > 0.0 && tf < 1.0) {
            return Err(Error::Config(format!("dataset.test_fraction must be in (0, 1), got {tf}")));
        }
        if !(0.0..1.0).contains(&self.noise.ratio) {
            return Err(Error::Config(format!("noise.ratio must be in [0, 1), got {}", self.noise.ratio)));
        }
        if self.train.last_k == 0 || self.train.last_k > self.train.epochs {
            return Err(Error::Config(format!(
                "train.last_k must be in 1..={}, got {}",
                self.train.epochs, self.train.last_k
            )));
        }
        match self.method {
            Method::Clc | Method::Slc => self.clc_config().validate(),
            Method::Standard => self.baseline_config().validate(crate::train::BaselineMethod::Standard),
            Method::Bootstrap => self.baseline_config().validate(crate::train::BaselineMethod::Bootstrap),
            Method::Forward => self.baseline_config().validate(crate::train::BaselineMethod::Forward),
            Method::Decouple => self.baseline_config().validate(crate::train::BaselineMethod::Decouple),
            Method::SelfPaced => self.baseline_config().validate(crate::train::BaselineMethod::SelfPaced),
            Method::CoTeaching => self.baseline_config().validate(crate::train::BaselineMethod::CoTeaching),
            Method::CoDistillation => {
                self.baseline_config().validate(crate::train::BaselineMethod::CoDistillation)
            }
        }
    }
}
