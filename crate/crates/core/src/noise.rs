//! Label-noise transition matrices, label corruption and confusion counts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// Flip mass `r` spread evenly over every other class.
    Symmetric,
    /// Flip class `i` to `(i + 1) mod c` with probability `r`.
    Pairwise,
    /// Flip only listed `source → destination` pairs with probability `r`.
    Asymmetric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub ratio: f64,
    /// Asymmetric only; empty means the default `(2k+1 → 2k)` pairs.
    pub pairs: Vec<(usize, usize)>,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(kind: NoiseKind, ratio: f64, seed: u64) -> Self {
        Self {
            kind,
            ratio,
            pairs: Vec::new(),
            seed,
        }
    }

    pub fn with_pairs(mut self, pairs: Vec<(usize, usize)>) -> Self {
        self.pairs = pairs;
        self
    }
}

/// Default confusable pairs: `2k+1 → 2k` for every complete pair.
pub fn default_asymmetric_pairs(classes: usize) -> Vec<(usize, usize)> {
    (0..classes / 2).map(|k| (2 * k + 1, 2 * k)).collect()
}

/// Row-stochastic `c × c` matrix; `entries[i][j] = P(noisy = j | clean = i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    entries: Vec<Vec<f64>>,
}

impl TransitionMatrix {
    pub fn identity(classes: usize) -> Self {
        let entries = (0..classes)
            .map(|i| (0..classes).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self { entries }
    }

    /// Validate and wrap explicit rows.
    pub fn from_rows(entries: Vec<Vec<f64>>) -> Result<Self> {
        let c = entries.len();
        if c < 2 {
            return Err(Error::construction("transition matrix needs at least 2 classes"));
        }
        for (i, row) in entries.iter().enumerate() {
            if row.len() != c {
                return Err(Error::construction(format!("row {i} has {} entries, expected {c}", row.len())));
            }
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::construction(format!("row {i} has entries outside [0, 1]")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::construction(format!("row {i} sums to {sum}")));
            }
        }
        Ok(Self { entries })
    }

    pub fn build(spec: &NoiseSpec, classes: usize) -> Result<Self> {
        if classes < 2 {
            return Err(Error::construction("noise model needs at least 2 classes"));
        }
        let r = spec.ratio;
        if !(0.0..1.0).contains(&r) {
            return Err(Error::construction(format!("noise ratio {r} outside [0, 1)")));
        }
        let mut t = Self::identity(classes);
        match spec.kind {
            NoiseKind::Symmetric => {
                let off = r / (classes - 1) as f64;
                for (i, row) in t.entries.iter_mut().enumerate() {
                    for (j, p) in row.iter_mut().enumerate() {
                        *p = if i == j { 1.0 - r } else { off };
                    }
                }
            }
            NoiseKind::Pairwise => {
                for i in 0..classes {
                    t.entries[i][i] = 1.0 - r;
                    t.entries[i][(i + 1) % classes] = r;
                }
            }
            NoiseKind::Asymmetric => {
                let pairs = if spec.pairs.is_empty() {
                    default_asymmetric_pairs(classes)
                } else {
                    spec.pairs.clone()
                };
                let mut seen = vec![false; classes];
                for &(s, d) in &pairs {
                    if s >= classes || d >= classes {
                        return Err(Error::construction(format!("pair {s}->{d} out of range for {classes} classes")));
                    }
                    if s == d {
                        return Err(Error::construction(format!("pair {s}->{d} maps a class to itself")));
                    }
                    if std::mem::replace(&mut seen[s], true) {
                        return Err(Error::construction(format!("class {s} appears as a source twice")));
                    }
                    t.entries[s][s] = 1.0 - r;
                    t.entries[s][d] = r;
                }
            }
        }
        Ok(t)
    }

    pub fn classes(&self) -> usize {
        self.entries.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, clean: usize, noisy: usize) -> f64 {
        self.entries[clean][noisy]
    }

    pub fn is_identity(&self) -> bool {
        self.entries
            .iter()
            .enumerate()
            .all(|(i, row)| row.iter().enumerate().all(|(j, &p)| p == if i == j { 1.0 } else { 0.0 }))
    }
}

/// Draw one noisy label per clean label from the matching row of `t`.
pub fn inject_noise(clean: &[usize], t: &TransitionMatrix, rng: &mut SeededRng) -> Result<Vec<usize>> {
    clean
        .iter()
        .map(|&y| {
            if y >= t.classes() {
                return Err(Error::invalid(format!("label {y} out of range for {} classes", t.classes())));
            }
            Ok(rng.categorical(&t.entries[y]))
        })
        .collect()
}

/// `counts[i][j] = #{n : a_n = i ∧ b_n = j}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(a: &[usize], b: &[usize], classes: usize) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::invalid(format!("label sequences differ in length: {} vs {}", a.len(), b.len())));
        }
        let mut counts = vec![vec![0u64; classes]; classes];
        for (&i, &j) in a.iter().zip(b) {
            if i >= classes || j >= classes {
                return Err(Error::invalid(format!("label out of range for {classes} classes")));
            }
            counts[i][j] += 1;
        }
        Ok(Self { counts })
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Row-normalized form; all-zero rows stay zero.
    pub fn normalized(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|row| {
                let total: u64 = row.iter().sum();
                row.iter()
                    .map(|&n| if total == 0 { 0.0 } else { n as f64 / total as f64 })
                    .collect()
            })
            .collect()
    }
}

pub fn confusion_matrix(a: &[usize], b: &[usize], classes: usize) -> Result<ConfusionMatrix> {
    ConfusionMatrix::new(a, b, classes)
}
