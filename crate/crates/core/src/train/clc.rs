//! Collaborative label correction and its single-network ablation.

use super::{run_method, Batch, EpochStats, Member, Method, TrainOutcome, TrainSettings};
use crate::data::{LabeledDataset, TrainingView};
use crate::error::{Error, Result};
use crate::loss::{entropy_row, softce_row};
use crate::math::{argmax, cross_entropy_row, entropy, softmax_rows, Matrix};
use crate::metrics::MethodExtras;
use crate::select::{partition_by_entropy_with, BatchPartition, GammaPolicy};

#[derive(Debug, Clone, PartialEq)]
pub struct ClcConfig {
    pub train: TrainSettings,
    /// Weight of the entropy term on the network's own low-entropy set.
    pub alpha: f64,
    /// Weight of the cross-entropy on original labels over the partner's
    /// high-entropy set.
    pub beta: f64,
    pub gamma: GammaPolicy,
    /// Use argmax one-hot pseudo-labels instead of soft probability rows.
    pub hard_pseudo_labels: bool,
    /// In auto mode, average the warm-up entropy of `f` and `g` instead of
    /// using `f` alone.
    pub gamma_from_both: bool,
}

impl Default for ClcConfig {
    fn default() -> Self {
        Self {
            train: TrainSettings::default(),
            alpha: 0.1,
            beta: 0.5,
            gamma: GammaPolicy::Auto,
            hard_pseudo_labels: false,
            gamma_from_both: false,
        }
    }
}

impl ClcConfig {
    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        self.gamma.validate()?;
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Per-term values of one network's batch objective.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossBreakdown {
    /// Cross-entropy against the partner's low-entropy pseudo-labels.
    pub ce_low: f64,
    /// Mean entropy of own predictions on the own low-entropy set.
    pub ent_own: f64,
    /// Cross-entropy against original labels on the partner's high-entropy set.
    pub ce_high: f64,
    /// `ce_low + alpha · ent_own + beta · ce_high`.
    pub total: f64,
}

/// Batch objective of one network and its gradient with respect to that
/// network's logits.
///
/// Each term is the mean over its own subset; an empty subset contributes 0.
pub fn clc_batch_loss(
    own_probs: &Matrix,
    partner: &BatchPartition,
    own: &BatchPartition,
    noisy_onehot: &Matrix,
    alpha: f64,
    beta: f64,
) -> Result<(LossBreakdown, Matrix)> {
    let n = own_probs.rows();
    own_probs.ensure_same_shape(noisy_onehot, "clc_batch_loss")?;
    for (name, p) in [("partner", partner), ("own", own)] {
        if p.batch_size() != n || p.classes() != own_probs.cols() {
            return Err(Error::invalid(format!(
                "{name} partition covers {} rows x {} classes, batch is {:?}",
                p.batch_size(),
                p.classes(),
                own_probs.shape()
            )));
        }
    }
    let mut grad = Matrix::zeros(n, own_probs.cols());
    let mut out = LossBreakdown::default();

    let low = partner.low_indices();
    if !low.is_empty() {
        let denom = low.len() as f64;
        for (i, &k) in low.iter().enumerate() {
            let target = partner.low_target(i);
            out.ce_low += cross_entropy_row(target, own_probs.row(k));
            softce_row(grad.row_mut(k), target, own_probs.row(k), denom, 1.0);
        }
        out.ce_low /= denom;
    }

    let own_low = own.low_indices();
    if !own_low.is_empty() {
        let denom = own_low.len() as f64;
        for &k in own_low {
            out.ent_own += entropy(own_probs.row(k));
            entropy_row(grad.row_mut(k), own_probs.row(k), denom, alpha);
        }
        out.ent_own /= denom;
    }

    let high = partner.high_indices();
    if !high.is_empty() {
        let denom = high.len() as f64;
        for &k in high {
            out.ce_high += cross_entropy_row(noisy_onehot.row(k), own_probs.row(k));
            softce_row(grad.row_mut(k), noisy_onehot.row(k), own_probs.row(k), denom, beta);
        }
        out.ce_high /= denom;
    }

    out.total = out.ce_low + alpha * out.ent_own + beta * out.ce_high;
    Ok((out, grad))
}

#[derive(Default)]
struct Tally {
    n_low_f: usize,
    n_high_f: usize,
    n_low_g: usize,
    n_high_g: usize,
    n_corrected: usize,
    loss: LossBreakdown,
    batches: usize,
}

impl Tally {
    fn add_loss(&mut self, l: &LossBreakdown) {
        self.loss.ce_low += l.ce_low;
        self.loss.ent_own += l.ent_own;
        self.loss.ce_high += l.ce_high;
        self.loss.total += l.total;
        self.batches += 1;
    }

    fn mean_loss(&self) -> LossBreakdown {
        let b = self.batches.max(1) as f64;
        LossBreakdown {
            ce_low: self.loss.ce_low / b,
            ent_own: self.loss.ent_own / b,
            ce_high: self.loss.ce_high / b,
            total: self.loss.total / b,
        }
    }
}

/// Record, for each row of `batch`, the label it was supervised with:
/// the partner's hard pseudo-label on its low set, else the noisy label.
fn record_effective(effective: &mut [Option<usize>], batch: &Batch<'_>, partner: &BatchPartition) {
    for (pos, &i) in batch.indices.iter().enumerate() {
        effective[i] = Some(batch.labels[pos]);
    }
    for (j, &pos) in partner.low_indices().iter().enumerate() {
        effective[batch.indices[pos]] = Some(argmax(partner.low_target(j)));
    }
}

struct Clc {
    members: Vec<Member>,
    alpha: f64,
    beta: f64,
    hard: bool,
}

impl Method for Clc {
    fn members(&self) -> &[Member] {
        &self.members
    }

    fn members_mut(&mut self) -> &mut [Member] {
        &mut self.members
    }

    fn main_epoch(&mut self, view: &TrainingView<'_>, batch_size: usize, _since: usize, gamma: f64) -> Result<EpochStats> {
        let n = view.len();
        let [f, g] = &mut self.members[..] else {
            unreachable!("CLC trains exactly two networks")
        };
        let batches_f = f.epoch_batches(n, batch_size);
        let batches_g = g.epoch_batches(n, batch_size);
        let mut effective = vec![None; n];
        let mut tally = Tally::default();

        for (idx_f, idx_g) in batches_f.iter().zip(&batches_g) {
            // Everything below reads pre-update parameters of both networks.
            let bf = Batch::gather(view, idx_f)?;
            let (logits_f, cache_f) = f.net.forward(&bf.x)?;
            let pf = softmax_rows(&logits_f)?;
            let pg_on_f = g.net.predict_proba(&bf.x)?;
            let own_f = partition_by_entropy_with(&pf, &bf.onehot, gamma, self.hard)?;
            let g_on_f = partition_by_entropy_with(&pg_on_f, &bf.onehot, gamma, self.hard)?;
            let (loss_f, grad_f) = clc_batch_loss(&pf, &g_on_f, &own_f, &bf.onehot, self.alpha, self.beta)?;

            let bg = Batch::gather(view, idx_g)?;
            let (logits_g, cache_g) = g.net.forward(&bg.x)?;
            let pg = softmax_rows(&logits_g)?;
            let pf_on_g = f.net.predict_proba(&bg.x)?;
            let own_g = partition_by_entropy_with(&pg, &bg.onehot, gamma, self.hard)?;
            let f_on_g = partition_by_entropy_with(&pf_on_g, &bg.onehot, gamma, self.hard)?;
            let (_, grad_g) = clc_batch_loss(&pg, &f_on_g, &own_g, &bg.onehot, self.alpha, self.beta)?;

            f.apply(&cache_f, &grad_f)?;
            g.apply(&cache_g, &grad_g)?;

            record_effective(&mut effective, &bf, &g_on_f);
            tally.n_low_f += own_f.low_count();
            tally.n_high_f += own_f.high_count();
            tally.n_low_g += own_g.low_count();
            tally.n_high_g += own_g.high_count();
            tally.n_corrected += g_on_f.low_count();
            tally.add_loss(&loss_f);
        }

        let loss = tally.mean_loss();
        Ok(EpochStats {
            effective,
            loss: loss.total,
            extras: MethodExtras::Clc {
                n_low_f: tally.n_low_f,
                n_high_f: tally.n_high_f,
                n_low_g: tally.n_low_g,
                n_high_g: tally.n_high_g,
                n_corrected: tally.n_corrected,
                ce_low: loss.ce_low,
                ent_own: loss.ent_own,
                ce_high: loss.ce_high,
            },
        })
    }
}

/// Train two networks that correct each other's labels with their
/// low-entropy predictions. Returns the run with `nets = [f, g]`.
pub fn train_clc(train: &LabeledDataset, test: &LabeledDataset, config: &ClcConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let view = train.training_view();
    let s = &config.train;
    let mut method = Clc {
        members: vec![
            Member::new(s, &view, s.streams.init_f, s.streams.shuffle_f)?,
            Member::new(s, &view, s.streams.init_g, s.streams.shuffle_g)?,
        ],
        alpha: config.alpha,
        beta: config.beta,
        hard: config.hard_pseudo_labels,
    };
    run_method(&mut method, train, test, s, config.gamma, config.gamma_from_both)
}

struct Slc {
    members: Vec<Member>,
    alpha: f64,
    beta: f64,
    hard: bool,
}

impl Method for Slc {
    fn members(&self) -> &[Member] {
        &self.members
    }

    fn members_mut(&mut self) -> &mut [Member] {
        &mut self.members
    }

    fn main_epoch(&mut self, view: &TrainingView<'_>, batch_size: usize, _since: usize, gamma: f64) -> Result<EpochStats> {
        let n = view.len();
        let f = &mut self.members[0];
        let mut effective = vec![None; n];
        let mut tally = Tally::default();
        for idx in f.epoch_batches(n, batch_size) {
            let b = Batch::gather(view, &idx)?;
            let (logits, cache) = f.net.forward(&b.x)?;
            let p = softmax_rows(&logits)?;
            let own = partition_by_entropy_with(&p, &b.onehot, gamma, self.hard)?;
            let (loss, grad) = clc_batch_loss(&p, &own, &own, &b.onehot, self.alpha, self.beta)?;
            f.apply(&cache, &grad)?;
            record_effective(&mut effective, &b, &own);
            tally.n_low_f += own.low_count();
            tally.n_high_f += own.high_count();
            tally.add_loss(&loss);
        }
        let loss = tally.mean_loss();
        Ok(EpochStats {
            effective,
            loss: loss.total,
            extras: MethodExtras::Slc {
                n_low: tally.n_low_f,
                n_high: tally.n_high_f,
                ce_low: loss.ce_low,
                ent_own: loss.ent_own,
                ce_high: loss.ce_high,
            },
        })
    }
}

/// Single-network ablation: the network is its own partner.
pub fn train_slc(train: &LabeledDataset, test: &LabeledDataset, config: &ClcConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let view = train.training_view();
    let s = &config.train;
    let mut method = Slc {
        members: vec![Member::new(s, &view, s.streams.init_f, s.streams.shuffle_f)?],
        alpha: config.alpha,
        beta: config.beta,
        hard: config.hard_pseudo_labels,
    };
    run_method(&mut method, train, test, s, config.gamma, false)
}
