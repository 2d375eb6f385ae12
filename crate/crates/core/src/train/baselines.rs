//! Comparison methods: Standard, Bootstrap, Forward, Decouple, self-paced
//! small-loss selection (MentorNet's self-paced variant), Co-teaching and
//! Co-distillation.

use serde::{Deserialize, Serialize};

use super::{run_method, subset_ce, Batch, EpochStats, Member, Method, TrainOutcome, TrainSettings};
use crate::data::{LabeledDataset, TrainingView};
use crate::error::{Error, Result};
use crate::loss::{entropy_row, per_sample_ce, softce_row};
use crate::math::{argmax, cross_entropy_row, entropy, softmax_rows, Matrix, LOG_EPS};
use crate::metrics::MethodExtras;
use crate::noise::TransitionMatrix;
use crate::select::GammaPolicy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMethod {
    Standard,
    Bootstrap,
    Forward,
    Decouple,
    SelfPaced,
    CoTeaching,
    CoDistillation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineConfig {
    pub train: TrainSettings,
    /// Weight on the given label in the bootstrap target mixture.
    pub bootstrap_kappa: f64,
    /// Weight of the partner-distillation term.
    pub codistill_lambda: f64,
    /// Noise ratio given as side information to the small-loss methods.
    pub noise_ratio: Option<f64>,
    /// Epochs over which the small-loss keep rate ramps down to `1 − r`.
    pub schedule_epochs: usize,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            train: TrainSettings::default(),
            bootstrap_kappa: 0.95,
            codistill_lambda: 1.0,
            noise_ratio: None,
            schedule_epochs: 10,
        }
    }
}

impl BaselineConfig {
    pub fn validate(&self, method: BaselineMethod) -> Result<()> {
        self.train.validate()?;
        if !(0.0..=1.0).contains(&self.bootstrap_kappa) {
            return Err(Error::Config(format!("bootstrap_kappa must be in [0, 1], got {}", self.bootstrap_kappa)));
        }
        if !(self.codistill_lambda >= 0.0 && self.codistill_lambda.is_finite()) {
            return Err(Error::Config(format!("codistill_lambda must be >= 0, got {}", self.codistill_lambda)));
        }
        if matches!(method, BaselineMethod::SelfPaced | BaselineMethod::CoTeaching) {
            match self.noise_ratio {
                Some(r) if (0.0..1.0).contains(&r) => {}
                Some(r) => return Err(Error::Config(format!("noise_ratio must be in [0, 1), got {r}"))),
                None => return Err(Error::Config("small-loss methods need noise_ratio as side information".into())),
            }
            if self.schedule_epochs == 0 {
                return Err(Error::Config("schedule_epochs must be positive".into()));
            }
        }
        Ok(())
    }

    fn ratio(&self) -> f64 {
        self.noise_ratio.unwrap_or(0.0)
    }
}

/// Fraction of each batch kept by small-loss selection after `epochs`
/// post-warm-up epochs: `1 − r · min(epochs / schedule, 1)`.
pub fn coteaching_keep_rate(noise_ratio: f64, epochs: usize, schedule_epochs: usize) -> f64 {
    1.0 - noise_ratio * (epochs as f64 / schedule_epochs as f64).min(1.0)
}

/// Bootstrap targets `kappa · onehot + (1 − kappa) · probs`.
pub fn bootstrap_targets(onehot: &Matrix, probs: &Matrix, kappa: f64) -> Result<Matrix> {
    onehot.ensure_same_shape(probs, "bootstrap_targets")?;
    let values = onehot
        .values()
        .iter()
        .zip(probs.values())
        .map(|(&y, &p)| kappa * y + (1.0 - kappa) * p)
        .collect();
    Matrix::new(onehot.rows(), onehot.cols(), values)
}

/// Noisy-label posterior `q = p · T`.
pub fn forward_corrected_probs(probs: &Matrix, t: &TransitionMatrix) -> Result<Matrix> {
    if probs.cols() != t.classes() {
        return Err(Error::invalid("transition matrix size differs from class count"));
    }
    let c = t.classes();
    let mut q = Matrix::zeros(probs.rows(), c);
    for r in 0..probs.rows() {
        for j in 0..c {
            let v = (0..c).map(|i| probs.get(r, i) * t.get(i, j)).sum();
            q.set(r, j, v);
        }
    }
    Ok(q)
}

/// Bootstrap loss `κ·CE(y, p) + (1 − κ)·H(p)`, mean over the batch, and its
/// logit gradient. The mixture target is not detached, so the gradient
/// includes the entropy term.
pub fn bootstrap_loss(probs: &Matrix, onehot: &Matrix, kappa: f64) -> (f64, Matrix) {
    let rows = probs.rows() as f64;
    let mut grad = Matrix::zeros(probs.rows(), probs.cols());
    let mut loss = 0.0;
    for r in 0..probs.rows() {
        loss += kappa * cross_entropy_row(onehot.row(r), probs.row(r)) + (1.0 - kappa) * entropy(probs.row(r));
        softce_row(grad.row_mut(r), onehot.row(r), probs.row(r), rows, kappa);
        entropy_row(grad.row_mut(r), probs.row(r), rows, 1.0 - kappa);
    }
    (loss / rows, grad)
}

/// Loss `−ln (pT)_y` and its logit gradient.
///
/// With `r_k = p_k T_{k,y} / (pT)_y` (the clean-class posterior given the
/// noisy label) the gradient is `(p − r) / n`.
pub fn forward_loss(probs: &Matrix, labels: &[usize], t: &TransitionMatrix) -> (f64, Matrix) {
    let (n, c) = probs.shape();
    let mut grad = Matrix::zeros(n, c);
    let mut loss = 0.0;
    let mut r = vec![0.0; c];
    for (row, &y) in labels.iter().enumerate() {
        let p = probs.row(row);
        let q_y: f64 = (0..c).map(|i| p[i] * t.get(i, y)).sum();
        loss -= q_y.max(LOG_EPS).ln();
        if q_y > 0.0 {
            for (k, rk) in r.iter_mut().enumerate() {
                *rk = p[k] * t.get(k, y) / q_y;
            }
        } else {
            let col: f64 = (0..c).map(|i| t.get(i, y)).sum();
            for (k, rk) in r.iter_mut().enumerate() {
                *rk = t.get(k, y) / col;
            }
        }
        softce_row(grad.row_mut(row), &r, p, n as f64, 1.0);
    }
    (loss / n as f64, grad)
}

/// Indices of the `floor(keep_rate · n)` smallest losses (ties by position),
/// returned in batch order.
fn small_loss_indices(losses: &[f64], keep_rate: f64) -> Vec<usize> {
    let keep = ((keep_rate * losses.len() as f64).floor() as usize).min(losses.len());
    let mut order: Vec<usize> = (0..losses.len()).collect();
    order.sort_by(|&a, &b| losses[a].total_cmp(&losses[b]).then(a.cmp(&b)));
    let mut kept = order[..keep].to_vec();
    kept.sort_unstable();
    kept
}

fn mark_selected(effective: &mut [Option<usize>], batch: &Batch<'_>, rows: &[usize]) {
    for &pos in rows {
        effective[batch.indices[pos]] = Some(batch.labels[pos]);
    }
}

struct Baseline {
    method: BaselineMethod,
    members: Vec<Member>,
    cfg: BaselineConfig,
    transition: Option<TransitionMatrix>,
}

impl Baseline {
    fn single_epoch(&mut self, view: &TrainingView<'_>, batch_size: usize, since: usize) -> Result<EpochStats> {
        let n = view.len();
        let kappa = self.cfg.bootstrap_kappa;
        let keep_rate = coteaching_keep_rate(self.cfg.ratio(), since, self.cfg.schedule_epochs);
        let method = self.method;
        let transition = self.transition.as_ref();
        let f = &mut self.members[0];
        let mut effective = vec![None; n];
        let mut total_loss = 0.0;
        let batches = f.epoch_batches(n, batch_size);
        for idx in &batches {
            let b = Batch::gather(view, idx)?;
            let (logits, cache) = f.net.forward(&b.x)?;
            let p = softmax_rows(&logits)?;
            let (loss, grad) = match method {
                BaselineMethod::Standard => subset_ce(&p, &b.onehot, None),
                BaselineMethod::Bootstrap => bootstrap_loss(&p, &b.onehot, kappa),
                BaselineMethod::Forward => {
                    forward_loss(&p, &b.labels, transition.expect("forward needs a transition matrix"))
                }
                BaselineMethod::SelfPaced => {
                    let keep = small_loss_indices(&per_sample_ce(&p, &b.labels), keep_rate);
                    mark_selected(&mut effective, &b, &keep);
                    if keep.is_empty() {
                        continue;
                    }
                    subset_ce(&p, &b.onehot, Some(&keep))
                }
                _ => unreachable!("dual-network method in single-network loop"),
            };
            total_loss += loss;
            f.apply(&cache, &grad)?;
        }
        if method == BaselineMethod::SelfPaced {
            Ok(EpochStats {
                effective,
                loss: total_loss / batches.len() as f64,
                extras: MethodExtras::None,
            })
        } else {
            Ok(EpochStats::all_noisy(view, total_loss / batches.len() as f64))
        }
    }

    fn dual_epoch(&mut self, view: &TrainingView<'_>, batch_size: usize, since: usize) -> Result<EpochStats> {
        let n = view.len();
        let method = self.method;
        let lambda = self.cfg.codistill_lambda;
        let keep_rate = coteaching_keep_rate(self.cfg.ratio(), since, self.cfg.schedule_epochs);
        let [f, g] = &mut self.members[..] else {
            unreachable!("dual methods train two networks")
        };
        let batches_f = f.epoch_batches(n, batch_size);
        let batches_g = g.epoch_batches(n, batch_size);
        let mut effective = vec![None; n];
        let mut total_loss = 0.0;

        for (idx_f, idx_g) in batches_f.iter().zip(&batches_g) {
            let bf = Batch::gather(view, idx_f)?;
            let (logits_f, cache_f) = f.net.forward(&bf.x)?;
            let pf = softmax_rows(&logits_f)?;
            let pg_on_f = g.net.predict_proba(&bf.x)?;

            let bg = Batch::gather(view, idx_g)?;
            let (logits_g, cache_g) = g.net.forward(&bg.x)?;
            let pg = softmax_rows(&logits_g)?;
            let pf_on_g = f.net.predict_proba(&bg.x)?;

            // Rows each network trains on; `None` means the whole batch.
            let (rows_f, rows_g): (Option<Vec<usize>>, Option<Vec<usize>>) = match method {
                BaselineMethod::Decouple => (
                    Some(disagreement(&pf, &pg_on_f)),
                    Some(disagreement(&pg, &pf_on_g)),
                ),
                BaselineMethod::CoTeaching => (
                    Some(small_loss_indices(&per_sample_ce(&pg_on_f, &bf.labels), keep_rate)),
                    Some(small_loss_indices(&per_sample_ce(&pf_on_g, &bg.labels), keep_rate)),
                ),
                BaselineMethod::CoDistillation => (None, None),
                _ => unreachable!("single-network method in dual loop"),
            };

            let (loss_f, grad_f) = if method == BaselineMethod::CoDistillation {
                codistill_loss(&pf, &bf.onehot, &pg_on_f, lambda)
            } else {
                subset_ce(&pf, &bf.onehot, rows_f.as_deref())
            };
            let (_, grad_g) = if method == BaselineMethod::CoDistillation {
                codistill_loss(&pg, &bg.onehot, &pf_on_g, lambda)
            } else {
                subset_ce(&pg, &bg.onehot, rows_g.as_deref())
            };

            match &rows_f {
                Some(rows) => {
                    mark_selected(&mut effective, &bf, rows);
                    if !rows.is_empty() {
                        f.apply(&cache_f, &grad_f)?;
                    }
                }
                None => {
                    mark_selected(&mut effective, &bf, &(0..bf.labels.len()).collect::<Vec<_>>());
                    f.apply(&cache_f, &grad_f)?;
                }
            }
            match &rows_g {
                Some(rows) if rows.is_empty() => {}
                _ => g.apply(&cache_g, &grad_g)?,
            }
            total_loss += loss_f;
        }
        Ok(EpochStats {
            effective,
            loss: total_loss / batches_f.len() as f64,
            extras: MethodExtras::None,
        })
    }
}

fn disagreement(a: &Matrix, b: &Matrix) -> Vec<usize> {
    a.iter_rows()
        .zip(b.iter_rows())
        .enumerate()
        .filter(|(_, (x, y))| argmax(x) != argmax(y))
        .map(|(k, _)| k)
        .collect()
}

/// `CE(y, p) + λ · CE(partner, p)` with the partner's probabilities held fixed.
pub fn codistill_loss(probs: &Matrix, onehot: &Matrix, partner: &Matrix, lambda: f64) -> (f64, Matrix) {
    let n = probs.rows() as f64;
    let mut grad = Matrix::zeros(probs.rows(), probs.cols());
    let mut loss = 0.0;
    for r in 0..probs.rows() {
        loss += cross_entropy_row(onehot.row(r), probs.row(r)) + lambda * cross_entropy_row(partner.row(r), probs.row(r));
        softce_row(grad.row_mut(r), onehot.row(r), probs.row(r), n, 1.0);
        softce_row(grad.row_mut(r), partner.row(r), probs.row(r), n, lambda);
    }
    (loss / n, grad)
}

impl Method for Baseline {
    fn members(&self) -> &[Member] {
        &self.members
    }

    fn members_mut(&mut self) -> &mut [Member] {
        &mut self.members
    }

    fn main_epoch(&mut self, view: &TrainingView<'_>, batch_size: usize, since: usize, _gamma: f64) -> Result<EpochStats> {
        match self.method {
            BaselineMethod::Decouple | BaselineMethod::CoTeaching | BaselineMethod::CoDistillation => {
                self.dual_epoch(view, batch_size, since)
            }
            _ => self.single_epoch(view, batch_size, since),
        }
    }
}

fn train_baseline(
    method: BaselineMethod,
    train: &LabeledDataset,
    test: &LabeledDataset,
    cfg: &BaselineConfig,
    transition: Option<&TransitionMatrix>,
) -> Result<TrainOutcome> {
    cfg.validate(method)?;
    let view = train.training_view();
    let s = &cfg.train;
    let dual = matches!(
        method,
        BaselineMethod::Decouple | BaselineMethod::CoTeaching | BaselineMethod::CoDistillation
    );
    let mut members = vec![Member::new(s, &view, s.streams.init_f, s.streams.shuffle_f)?];
    if dual {
        members.push(Member::new(s, &view, s.streams.init_g, s.streams.shuffle_g)?);
    }
    let mut baseline = Baseline {
        method,
        members,
        cfg: cfg.clone(),
        transition: transition.cloned(),
    };
    run_method(&mut baseline, train, test, s, GammaPolicy::Auto, false)
}

/// Plain cross-entropy on the noisy labels.
pub fn train_standard(train: &LabeledDataset, test: &LabeledDataset, cfg: &BaselineConfig) -> Result<TrainOutcome> {
    train_baseline(BaselineMethod::Standard, train, test, cfg, None)
}

pub fn train_bootstrap(train: &LabeledDataset, test: &LabeledDataset, cfg: &BaselineConfig) -> Result<TrainOutcome> {
    train_baseline(BaselineMethod::Bootstrap, train, test, cfg, None)
}

/// Loss correction through a known transition matrix `t`.
pub fn train_forward(
    train: &LabeledDataset,
    test: &LabeledDataset,
    cfg: &BaselineConfig,
    t: &TransitionMatrix,
) -> Result<TrainOutcome> {
    if t.classes() != train.classes() {
        return Err(Error::Config(format!(
            "transition matrix has {} classes, dataset has {}",
            t.classes(),
            train.classes()
        )));
    }
    train_baseline(BaselineMethod::Forward, train, test, cfg, Some(t))
}

/// Two networks, each updated only where their predictions disagree.
pub fn train_decouple(train: &LabeledDataset, test: &LabeledDataset, cfg: &BaselineConfig) -> Result<TrainOutcome> {
    train_baseline(BaselineMethod::Decouple, train, test, cfg, None)
}

pub fn train_self_paced(train: &LabeledDataset, test: &LabeledDataset, cfg: &BaselineConfig) -> Result<TrainOutcome> {
    train_baseline(BaselineMethod::SelfPaced, train, test, cfg, None)
}

pub fn train_coteaching(train: &LabeledDataset, test: &LabeledDataset, cfg: &BaselineConfig) -> Result<TrainOutcome> {
    train_baseline(BaselineMethod::CoTeaching, train, test, cfg, None)
}

pub fn train_codistillation(train: &LabeledDataset, test: &LabeledDataset, cfg: &BaselineConfig) -> Result<TrainOutcome> {
    train_baseline(BaselineMethod::CoDistillation, train, test, cfg, None)
}
