//! Training loops: the shared epoch skeleton, CLC / SLC and the baselines.
//!
//! Every method follows the same outline. The first `warm_up_epochs` epochs
//! train each network with plain cross-entropy on the noisy labels. The
//! entropy threshold Γ is resolved right after warm-up and then held fixed.
//! Each network owns its batch-shuffling stream for the whole run; whenever a
//! method needs the partner's view of a batch, the partner is evaluated on
//! the owner's batch before either network steps.

mod baselines;
mod clc;

pub use baselines::{
    bootstrap_loss, bootstrap_targets, codistill_loss, coteaching_keep_rate, forward_loss, forward_corrected_probs, train_bootstrap,
    train_codistillation, train_coteaching, train_decouple, train_forward, train_self_paced,
    train_standard, BaselineConfig, BaselineMethod,
};
pub use clc::{clc_batch_loss, train_clc, train_slc, ClcConfig, LossBreakdown};

use crate::data::{LabeledDataset, TrainingView};
use crate::error::{Error, Result};
use crate::loss::softce_row;
use crate::math::{cross_entropy_row, softmax_rows, Matrix};
use crate::metrics::{EpochMetrics, Evaluator, MethodExtras};
use crate::net::{AdamState, MlpNetwork};
use crate::rng::{streams, SeededRng};
use crate::select::{estimate_gamma, GammaPolicy};

/// Stream labels for each network's initialization and batch order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetStreams {
    pub init_f: u64,
    pub init_g: u64,
    pub shuffle_f: u64,
    pub shuffle_g: u64,
}

impl Default for NetStreams {
    fn default() -> Self {
        Self {
            init_f: streams::INIT_F,
            init_g: streams::INIT_G,
            shuffle_f: streams::SHUFFLE_F,
            shuffle_g: streams::SHUFFLE_G,
        }
    }
}

impl NetStreams {
    /// `f` and `g` trade streams.
    pub fn swapped(self) -> Self {
        Self {
            init_f: self.init_g,
            init_g: self.init_f,
            shuffle_f: self.shuffle_g,
            shuffle_g: self.shuffle_f,
        }
    }
}

/// Settings shared by every trainer.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSettings {
    pub hidden: Vec<usize>,
    /// Total epochs, warm-up included.
    pub epochs: usize,
    pub warm_up_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub streams: NetStreams,
}

impl Default for TrainSettings {
    fn default() -> Self {
        Self {
            hidden: vec![64, 64],
            epochs: 50,
            warm_up_epochs: 10,
            batch_size: 128,
            learning_rate: 1e-3,
            seed: 0,
            streams: NetStreams::default(),
        }
    }
}

impl TrainSettings {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be positive".into()));
        }
        if self.warm_up_epochs >= self.epochs {
            return Err(Error::Config(format!(
                "warm_up_epochs ({}) must be smaller than epochs ({})",
                self.warm_up_epochs, self.epochs
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if self.hidden.contains(&0) {
            return Err(Error::Config("hidden layer widths must be positive".into()));
        }
        Ok(())
    }

    fn layer_dims(&self, input: usize, classes: usize) -> Vec<usize> {
        let mut dims = vec![input];
        dims.extend_from_slice(&self.hidden);
        dims.push(classes);
        dims
    }
}

/// Result of one training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub history: Vec<EpochMetrics>,
    /// `[f]` for single-network methods, `[f, g]` for dual ones.
    pub nets: Vec<MlpNetwork>,
    /// Γ resolved after warm-up.
    pub gamma: f64,
    /// Label each training sample was supervised with in the final epoch
    /// (its noisy label when it received no supervision).
    pub final_targets: Vec<usize>,
}

/// A network with its optimizer and batch order.
#[derive(Debug, Clone)]
pub(crate) struct Member {
    pub net: MlpNetwork,
    pub adam: AdamState,
    pub shuffle: SeededRng,
}

impl Member {
    pub fn new(settings: &TrainSettings, view: &TrainingView<'_>, init_stream: u64, shuffle_stream: u64) -> Result<Self> {
        let dims = settings.layer_dims(view.features.cols(), view.classes);
        let net = MlpNetwork::init(&dims, &mut SeededRng::new(settings.seed, init_stream))?;
        let adam = AdamState::new(&net, settings.learning_rate);
        Ok(Self {
            net,
            adam,
            shuffle: SeededRng::new(settings.seed, shuffle_stream),
        })
    }

    /// This epoch's mini-batches as index lists.
    pub fn epoch_batches(&mut self, n: usize, batch_size: usize) -> Vec<Vec<usize>> {
        let order = self.shuffle.permutation(n);
        order.chunks(batch_size).map(<[usize]>::to_vec).collect()
    }

    pub fn apply(&mut self, cache: &crate::net::ForwardCache, grad_logits: &Matrix) -> Result<()> {
        let grads = self.net.backward(cache, grad_logits)?;
        self.adam.step(&mut self.net, &grads)
    }

    /// Plain cross-entropy epoch on the noisy labels; returns the mean loss.
    pub fn standard_epoch(&mut self, view: &TrainingView<'_>, batch_size: usize) -> Result<f64> {
        let batches = self.epoch_batches(view.len(), batch_size);
        let mut total = 0.0;
        for idx in &batches {
            let batch = Batch::gather(view, idx)?;
            let (logits, cache) = self.net.forward(&batch.x)?;
            let probs = softmax_rows(&logits)?;
            let (loss, grad) = subset_ce(&probs, &batch.onehot, None);
            total += loss;
            self.apply(&cache, &grad)?;
        }
        Ok(total / batches.len() as f64)
    }
}

/// Rows of the training view selected for one mini-batch.
pub(crate) struct Batch<'a> {
    pub indices: &'a [usize],
    pub x: Matrix,
    pub labels: Vec<usize>,
    pub onehot: Matrix,
}

impl<'a> Batch<'a> {
    pub fn gather(view: &TrainingView<'_>, indices: &'a [usize]) -> Result<Self> {
        let labels: Vec<usize> = indices.iter().map(|&i| view.noisy_labels[i]).collect();
        Ok(Self {
            indices,
            x: view.features.select_rows(indices)?,
            onehot: Matrix::one_hot(&labels, view.classes)?,
            labels,
        })
    }
}

/// Mean cross-entropy against `targets` over `rows` (all rows when `None`),
/// with its logit gradient `(q − t) / |rows|` scattered into a batch-sized
/// matrix. An empty subset contributes a zero loss and a zero gradient.
pub fn subset_ce(probs: &Matrix, targets: &Matrix, rows: Option<&[usize]>) -> (f64, Matrix) {
    let mut grad = Matrix::zeros(probs.rows(), probs.cols());
    let all: Vec<usize>;
    let rows = match rows {
        Some(r) => r,
        None => {
            all = (0..probs.rows()).collect();
            &all
        }
    };
    if rows.is_empty() {
        return (0.0, grad);
    }
    let denom = rows.len() as f64;
    let mut loss = 0.0;
    for &r in rows {
        loss += cross_entropy_row(targets.row(r), probs.row(r));
        softce_row(grad.row_mut(r), targets.row(r), probs.row(r), denom, 1.0);
    }
    (loss / denom, grad)
}

/// What one epoch of training reports to the evaluator.
#[derive(Debug, Clone)]
pub(crate) struct EpochStats {
    /// Supervision label per training sample; `None` = not supervised.
    pub effective: Vec<Option<usize>>,
    pub loss: f64,
    pub extras: MethodExtras,
}

impl EpochStats {
    pub fn all_noisy(view: &TrainingView<'_>, loss: f64) -> Self {
        Self {
            effective: view.noisy_labels.iter().map(|&y| Some(y)).collect(),
            loss,
            extras: MethodExtras::None,
        }
    }
}

/// Method-specific part of a training run.
pub(crate) trait Method {
    fn members(&self) -> &[Member];
    fn members_mut(&mut self) -> &mut [Member];

    /// One epoch after warm-up. `epochs_since_warm_up` is 0 for the first.
    fn main_epoch(
        &mut self,
        view: &TrainingView<'_>,
        batch_size: usize,
        epochs_since_warm_up: usize,
        gamma: f64,
    ) -> Result<EpochStats>;

    /// Warm-up: every network trains as Standard on its own batches.
    fn warm_up_epoch(&mut self, view: &TrainingView<'_>, batch_size: usize) -> Result<EpochStats> {
        let mut first_loss = None;
        for m in self.members_mut() {
            let loss = m.standard_epoch(view, batch_size)?;
            first_loss.get_or_insert(loss);
        }
        Ok(EpochStats::all_noisy(view, first_loss.unwrap_or(0.0)))
    }

    fn resolve_gamma(&self, policy: GammaPolicy, features: &Matrix, average_both: bool) -> Result<f64> {
        match policy {
            GammaPolicy::Fixed(v) => Ok(v),
            GammaPolicy::Auto => {
                let members = self.members();
                if average_both && members.len() > 1 {
                    let total: f64 = members
                        .iter()
                        .map(|m| estimate_gamma(&m.net, features))
                        .sum::<Result<f64>>()?;
                    Ok(total / members.len() as f64)
                } else {
                    estimate_gamma(&members[0].net, features)
                }
            }
        }
    }
}

pub(crate) fn check_dataset(train: &LabeledDataset, test: &LabeledDataset) -> Result<()> {
    if train.is_empty() || test.is_empty() {
        return Err(Error::invalid("training and test sets must be non-empty"));
    }
    if train.dim() != test.dim() || train.classes() != test.classes() {
        return Err(Error::invalid("training and test sets disagree on dimension or class count"));
    }
    Ok(())
}

/// Drive `method` through warm-up and the main phase, evaluating after every
/// epoch. Only the evaluator sees clean labels.
pub(crate) fn run_method<M: Method>(
    method: &mut M,
    train: &LabeledDataset,
    test: &LabeledDataset,
    settings: &TrainSettings,
    gamma_policy: GammaPolicy,
    gamma_from_both: bool,
) -> Result<TrainOutcome> {
    settings.validate()?;
    gamma_policy.validate()?;
    check_dataset(train, test)?;
    let view = train.training_view();
    let evaluator = Evaluator::new(train, test);

    let mut gamma = None;
    if settings.warm_up_epochs == 0 {
        gamma = Some(method.resolve_gamma(gamma_policy, view.features, gamma_from_both)?);
    }
    let mut history = Vec::with_capacity(settings.epochs);
    let mut last_effective = Vec::new();
    for epoch in 1..=settings.epochs {
        let warm = epoch <= settings.warm_up_epochs;
        let stats = if warm {
            method.warm_up_epoch(&view, settings.batch_size)?
        } else {
            let since = epoch - settings.warm_up_epochs - 1;
            method.main_epoch(&view, settings.batch_size, since, gamma.expect("gamma resolved after warm-up"))?
        };
        if epoch == settings.warm_up_epochs {
            gamma = Some(method.resolve_gamma(gamma_policy, view.features, gamma_from_both)?);
        }
        history.push(evaluator.evaluate(epoch, warm, &method.members()[0].net, gamma, &stats)?);
        last_effective = stats.effective;
    }

    let final_targets = last_effective
        .iter()
        .zip(view.noisy_labels)
        .map(|(e, &y)| e.unwrap_or(y))
        .collect();
    Ok(TrainOutcome {
        history,
        nets: method.members().iter().map(|m| m.net.clone()).collect(),
        gamma: gamma.expect("at least one epoch after warm-up"),
        final_targets,
    })
}
