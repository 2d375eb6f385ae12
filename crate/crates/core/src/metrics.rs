//! Per-epoch evaluation, supervision precision, run summaries and the
//! `metrics.csv` format.
//!
//! The evaluator is the only code that reads clean training labels.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::math::{argmax, entropy};
use crate::net::MlpNetwork;
use crate::select::entropy_gap_stats;
use crate::train::EpochStats;

/// Comment line written above the CSV header.
pub const CSV_COMMENT: &str = "# n_selected / n_low_* / n_high_* / n_corrected are per-epoch totals over all mini-batches (not per-batch means)";

/// Method-specific per-epoch counters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MethodExtras {
    None,
    Clc {
        n_low_f: usize,
        n_high_f: usize,
        n_low_g: usize,
        n_high_g: usize,
        /// Samples of `f`'s batches supervised by `g`'s pseudo-labels.
        n_corrected: usize,
        ce_low: f64,
        ent_own: f64,
        ce_high: f64,
    },
    Slc {
        n_low: usize,
        n_high: usize,
        ce_low: f64,
        ent_own: f64,
        ce_high: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub warm_up: bool,
    pub test_accuracy: f64,
    /// Argmax accuracy on the training set against clean labels.
    pub train_accuracy_clean: f64,
    /// Argmax accuracy on the training set against noisy labels.
    pub train_accuracy_noisy: f64,
    /// Fraction of this epoch's supervision labels that equal the clean label.
    pub supervision_precision: Option<f64>,
    /// Training samples that received supervision this epoch.
    pub n_selected: usize,
    pub mean_entropy_correct: Option<f64>,
    pub mean_entropy_incorrect: Option<f64>,
    pub mean_entropy_all: f64,
    pub gamma: Option<f64>,
    /// Training samples whose prediction entropy is at most Γ.
    pub n_low_entropy: Option<usize>,
    /// Clean-label precision of argmax predictions on that low-entropy set.
    pub low_entropy_precision: Option<f64>,
    pub loss: f64,
    pub extras: MethodExtras,
}

/// Column layout of a metrics CSV.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricsSchema {
    Plain,
    Clc,
    Slc,
}

const COMMON_COLUMNS: [&str; 14] = [
    "epoch",
    "phase",
    "test_accuracy",
    "train_accuracy_clean",
    "train_accuracy_noisy",
    "supervision_precision",
    "n_selected",
    "mean_entropy_correct",
    "mean_entropy_incorrect",
    "mean_entropy_all",
    "gamma",
    "n_low_entropy",
    "low_entropy_precision",
    "loss",
];
const CLC_COLUMNS: [&str; 8] = [
    "n_low_f",
    "n_high_f",
    "n_low_g",
    "n_high_g",
    "n_corrected",
    "ce_low",
    "ent_own",
    "ce_high",
];
const SLC_COLUMNS: [&str; 5] = ["n_low", "n_high", "ce_low", "ent_own", "ce_high"];

impl MetricsSchema {
    pub fn columns(self) -> Vec<&'static str> {
        let mut cols = COMMON_COLUMNS.to_vec();
        match self {
            MetricsSchema::Plain => {}
            MetricsSchema::Clc => cols.extend(CLC_COLUMNS),
            MetricsSchema::Slc => cols.extend(SLC_COLUMNS),
        }
        cols
    }
}

/// Fraction of `targets` equal to `clean`.
pub fn supervision_precision(targets: &[usize], clean: &[usize]) -> Result<f64> {
    if targets.len() != clean.len() {
        return Err(Error::invalid(format!(
            "{} targets but {} clean labels",
            targets.len(),
            clean.len()
        )));
    }
    if targets.is_empty() {
        return Err(Error::invalid("precision of an empty supervision set"));
    }
    let hits = targets.iter().zip(clean).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / targets.len() as f64)
}

/// Evaluates a network after each epoch against clean labels.
pub struct Evaluator<'a> {
    train: &'a LabeledDataset,
    test: &'a LabeledDataset,
}

impl<'a> Evaluator<'a> {
    pub fn new(train: &'a LabeledDataset, test: &'a LabeledDataset) -> Self {
        Self { train, test }
    }

    pub(crate) fn evaluate(
        &self,
        epoch: usize,
        warm_up: bool,
        net: &MlpNetwork,
        gamma: Option<f64>,
        stats: &EpochStats,
    ) -> Result<EpochMetrics> {
        let test_probs = net.predict_proba(self.test.features())?;
        let test_hits = test_probs
            .iter_rows()
            .zip(self.test.clean_labels())
            .filter(|(row, &y)| argmax(row) == y)
            .count();

        let clean = self.train.clean_labels();
        let noisy = self.train.noisy_labels();
        let probs = net.predict_proba(self.train.features())?;
        let gap = entropy_gap_stats(&probs, clean)?;
        let n = clean.len() as f64;
        let noisy_hits = probs
            .iter_rows()
            .zip(noisy)
            .filter(|(row, &y)| argmax(row) == y)
            .count();

        let (n_low_entropy, low_entropy_precision) = match gamma {
            Some(g) => {
                let mut low = 0;
                let mut hits = 0;
                for (row, &y) in probs.iter_rows().zip(clean) {
                    if entropy(row) <= g {
                        low += 1;
                        hits += usize::from(argmax(row) == y);
                    }
                }
                (Some(low), (low > 0).then(|| hits as f64 / low as f64))
            }
            None => (None, None),
        };

        let (targets, truth): (Vec<usize>, Vec<usize>) = stats
            .effective
            .iter()
            .zip(clean)
            .filter_map(|(t, &y)| t.map(|t| (t, y)))
            .unzip();
        let supervision = if targets.is_empty() {
            None
        } else {
            Some(supervision_precision(&targets, &truth)?)
        };

        Ok(EpochMetrics {
            epoch,
            warm_up,
            test_accuracy: test_hits as f64 / self.test.len() as f64,
            train_accuracy_clean: gap.n_correct as f64 / n,
            train_accuracy_noisy: noisy_hits as f64 / n,
            supervision_precision: supervision,
            n_selected: targets.len(),
            mean_entropy_correct: gap.correct,
            mean_entropy_incorrect: gap.incorrect,
            mean_entropy_all: gap.all,
            gamma,
            n_low_entropy,
            low_entropy_precision,
            loss: stats.loss,
            extras: stats.extras,
        })
    }
}

/// Means over the final `last_k` epochs of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub last_k: usize,
    pub mean_test_accuracy: f64,
    pub mean_supervision_precision: Option<f64>,
    pub mean_n_selected: f64,
    pub peak_test_accuracy: f64,
    pub peak_epoch: usize,
    pub final_test_accuracy: f64,
}

pub fn summarize(history: &[EpochMetrics], last_k: usize) -> Result<Summary> {
    if last_k == 0 || last_k > history.len() {
        return Err(Error::invalid(format!(
            "cannot summarize the last {last_k} epochs of a {}-epoch history",
            history.len()
        )));
    }
    let tail = &history[history.len() - last_k..];
    let k = last_k as f64;
    let precisions: Vec<f64> = tail.iter().filter_map(|m| m.supervision_precision).collect();
    let peak = history
        .iter()
        .fold(&history[0], |best, m| if m.test_accuracy > best.test_accuracy { m } else { best });
    Ok(Summary {
        last_k,
        mean_test_accuracy: tail.iter().map(|m| m.test_accuracy).sum::<f64>() / k,
        mean_supervision_precision: (!precisions.is_empty())
            .then(|| precisions.iter().sum::<f64>() / precisions.len() as f64),
        mean_n_selected: tail.iter().map(|m| m.n_selected as f64).sum::<f64>() / k,
        peak_test_accuracy: peak.test_accuracy,
        peak_epoch: peak.epoch,
        final_test_accuracy: history.last().unwrap().test_accuracy,
    })
}

fn real(v: f64) -> String {
    format!("{v:.6}")
}

fn opt_real(v: Option<f64>) -> String {
    v.map(real).unwrap_or_default()
}

fn opt_count(v: Option<usize>) -> String {
    v.map(|n| n.to_string()).unwrap_or_default()
}

impl EpochMetrics {
    fn record(&self, schema: MetricsSchema) -> Vec<String> {
        let mut out = vec![
            self.epoch.to_string(),
            if self.warm_up { "warm_up" } else { "main" }.to_string(),
            real(self.test_accuracy),
            real(self.train_accuracy_clean),
            real(self.train_accuracy_noisy),
            opt_real(self.supervision_precision),
            self.n_selected.to_string(),
            opt_real(self.mean_entropy_correct),
            opt_real(self.mean_entropy_incorrect),
            real(self.mean_entropy_all),
            opt_real(self.gamma),
            opt_count(self.n_low_entropy),
            opt_real(self.low_entropy_precision),
            real(self.loss),
        ];
        match (schema, self.extras) {
            (MetricsSchema::Plain, _) => {}
            (
                MetricsSchema::Clc,
                MethodExtras::Clc { n_low_f, n_high_f, n_low_g, n_high_g, n_corrected, ce_low, ent_own, ce_high },
            ) => out.extend([
                n_low_f.to_string(),
                n_high_f.to_string(),
                n_low_g.to_string(),
                n_high_g.to_string(),
                n_corrected.to_string(),
                real(ce_low),
                real(ent_own),
                real(ce_high),
            ]),
            (MetricsSchema::Slc, MethodExtras::Slc { n_low, n_high, ce_low, ent_own, ce_high }) => out.extend([
                n_low.to_string(),
                n_high.to_string(),
                real(ce_low),
                real(ent_own),
                real(ce_high),
            ]),
            (MetricsSchema::Clc, _) => out.extend(std::iter::repeat_n(String::new(), CLC_COLUMNS.len())),
            (MetricsSchema::Slc, _) => out.extend(std::iter::repeat_n(String::new(), SLC_COLUMNS.len())),
        }
        out
    }

    /// The values a CSV round trip yields: reals rounded to 6 decimals.
    pub fn rounded(&self) -> Self {
        let r = |v: f64| real(v).parse::<f64>().unwrap();
        let extras = match self.extras {
            MethodExtras::None => MethodExtras::None,
            MethodExtras::Clc { n_low_f, n_high_f, n_low_g, n_high_g, n_corrected, ce_low, ent_own, ce_high } => {
                MethodExtras::Clc {
                    n_low_f,
                    n_high_f,
                    n_low_g,
                    n_high_g,
                    n_corrected,
                    ce_low: r(ce_low),
                    ent_own: r(ent_own),
                    ce_high: r(ce_high),
                }
            }
            MethodExtras::Slc { n_low, n_high, ce_low, ent_own, ce_high } => MethodExtras::Slc {
                n_low,
                n_high,
                ce_low: r(ce_low),
                ent_own: r(ent_own),
                ce_high: r(ce_high),
            },
        };
        Self {
            test_accuracy: r(self.test_accuracy),
            train_accuracy_clean: r(self.train_accuracy_clean),
            train_accuracy_noisy: r(self.train_accuracy_noisy),
            supervision_precision: self.supervision_precision.map(r),
            mean_entropy_correct: self.mean_entropy_correct.map(r),
            mean_entropy_incorrect: self.mean_entropy_incorrect.map(r),
            mean_entropy_all: r(self.mean_entropy_all),
            gamma: self.gamma.map(r),
            low_entropy_precision: self.low_entropy_precision.map(r),
            loss: r(self.loss),
            extras,
            ..self.clone()
        }
    }
}

/// Write the comment line, header and one row per epoch.
pub fn write_metrics_csv<W: Write>(mut out: W, schema: MetricsSchema, history: &[EpochMetrics]) -> Result<()> {
    writeln!(out, "{CSV_COMMENT}").map_err(|e| Error::io("writing metrics", e))?;
    let mut w = csv::Writer::from_writer(out);
    let map = |e: csv::Error| Error::Output(e.to_string());
    w.write_record(schema.columns()).map_err(map)?;
    for m in history {
        w.write_record(m.record(schema)).map_err(map)?;
    }
    w.flush().map_err(|e| Error::io("writing metrics", e))?;
    Ok(())
}

fn parse_field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, name: &str) -> Result<Option<T>> {
    let raw = rec.get(i).ok_or_else(|| Error::invalid(format!("missing column {name}")))?;
    if raw.is_empty() {
        return Ok(None);
    }
    raw.parse()
        .map(Some)
        .map_err(|_| Error::invalid(format!("bad value {raw:?} in column {name}")))
}

fn required<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, name: &str) -> Result<T> {
    parse_field(rec, i, name)?.ok_or_else(|| Error::invalid(format!("empty required column {name}")))
}

/// Parse a file written by [`write_metrics_csv`].
pub fn read_metrics_csv<R: Read>(input: R) -> Result<(MetricsSchema, Vec<EpochMetrics>)> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::invalid(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let schema = [MetricsSchema::Plain, MetricsSchema::Clc, MetricsSchema::Slc]
        .into_iter()
        .find(|s| s.columns() == header)
        .ok_or_else(|| Error::invalid(format!("unrecognized metrics header {header:?}")))?;

    let mut history = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::invalid(e.to_string()))?;
        let phase: String = required(&rec, 1, "phase")?;
        let mut m = EpochMetrics {
            epoch: required(&rec, 0, "epoch")?,
            warm_up: match phase.as_str() {
                "warm_up" => true,
                "main" => false,
                other => return Err(Error::invalid(format!("bad phase {other:?}"))),
            },
            test_accuracy: required(&rec, 2, "test_accuracy")?,
            train_accuracy_clean: required(&rec, 3, "train_accuracy_clean")?,
            train_accuracy_noisy: required(&rec, 4, "train_accuracy_noisy")?,
            supervision_precision: parse_field(&rec, 5, "supervision_precision")?,
            n_selected: required(&rec, 6, "n_selected")?,
            mean_entropy_correct: parse_field(&rec, 7, "mean_entropy_correct")?,
            mean_entropy_incorrect: parse_field(&rec, 8, "mean_entropy_incorrect")?,
            mean_entropy_all: required(&rec, 9, "mean_entropy_all")?,
            gamma: parse_field(&rec, 10, "gamma")?,
            n_low_entropy: parse_field(&rec, 11, "n_low_entropy")?,
            low_entropy_precision: parse_field(&rec, 12, "low_entropy_precision")?,
            loss: required(&rec, 13, "loss")?,
            extras: MethodExtras::None,
        };
        let base = COMMON_COLUMNS.len();
        let present = rec.get(base).is_some_and(|s| !s.is_empty());
        m.extras = match schema {
            MetricsSchema::Clc if present => MethodExtras::Clc {
                n_low_f: required(&rec, base, "n_low_f")?,
                n_high_f: required(&rec, base + 1, "n_high_f")?,
                n_low_g: required(&rec, base + 2, "n_low_g")?,
                n_high_g: required(&rec, base + 3, "n_high_g")?,
                n_corrected: required(&rec, base + 4, "n_corrected")?,
                ce_low: required(&rec, base + 5, "ce_low")?,
                ent_own: required(&rec, base + 6, "ent_own")?,
                ce_high: required(&rec, base + 7, "ce_high")?,
            },
            MetricsSchema::Slc if present => MethodExtras::Slc {
                n_low: required(&rec, base, "n_low")?,
                n_high: required(&rec, base + 1, "n_high")?,
                ce_low: required(&rec, base + 2, "ce_low")?,
                ent_own: required(&rec, base + 3, "ent_own")?,
                ce_high: required(&rec, base + 4, "ce_high")?,
            },
            _ => MethodExtras::None,
        };
        history.push(m);
    }
    Ok((schema, history))
}
