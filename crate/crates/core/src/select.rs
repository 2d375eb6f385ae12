//! Entropy thresholding: split a batch into trusted low-entropy predictions
//! and high-entropy samples that keep their original labels.

use crate::error::{Error, Result};
use crate::math::{argmax, entropy, Matrix};
use crate::net::MlpNetwork;

/// How the threshold Γ is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaPolicy {
    /// Mean prediction entropy of the warm-up model, frozen afterwards.
    Auto,
    /// Fixed threshold in nats. A negative value empties every low set.
    Fixed(f64),
}

impl GammaPolicy {
    pub fn validate(&self) -> Result<()> {
        match self {
            GammaPolicy::Fixed(v) if !v.is_finite() => {
                Err(Error::Config(format!("gamma must be finite, got {v}")))
            }
            _ => Ok(()),
        }
    }
}

/// One mini-batch split by prediction entropy.
///
/// Positions refer to rows of the batch the partition was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchPartition {
    classes: usize,
    entropies: Vec<f64>,
    low_indices: Vec<usize>,
    /// Row-major, one row per entry of `low_indices`.
    low_targets: Vec<f64>,
    high_indices: Vec<usize>,
    high_targets: Vec<f64>,
}

impl BatchPartition {
    pub fn batch_size(&self) -> usize {
        self.entropies.len()
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn entropies(&self) -> &[f64] {
        &self.entropies
    }

    pub fn low_indices(&self) -> &[usize] {
        &self.low_indices
    }

    pub fn high_indices(&self) -> &[usize] {
        &self.high_indices
    }

    /// Pseudo-label row for the `i`-th low-entropy position.
    pub fn low_target(&self, i: usize) -> &[f64] {
        &self.low_targets[i * self.classes..(i + 1) * self.classes]
    }

    /// Original one-hot label row for the `i`-th high-entropy position.
    pub fn high_target(&self, i: usize) -> &[f64] {
        &self.high_targets[i * self.classes..(i + 1) * self.classes]
    }

    pub fn low_count(&self) -> usize {
        self.low_indices.len()
    }

    pub fn high_count(&self) -> usize {
        self.high_indices.len()
    }

    /// `Some(k)` for each low position: hard pseudo-label of batch row.
    pub fn hard_pseudo_labels(&self) -> Vec<Option<usize>> {
        let mut out = vec![None; self.batch_size()];
        for (i, &pos) in self.low_indices.iter().enumerate() {
            out[pos] = Some(argmax(self.low_target(i)));
        }
        out
    }
}

/// Position `k` is low iff `H(probs[k]) ≤ gamma`. Low targets are the soft
/// probability rows (or their one-hot argmax when `hard` is set); high targets
/// are the rows of `noisy_onehot`.
pub fn partition_by_entropy_with(
    probs: &Matrix,
    noisy_onehot: &Matrix,
    gamma: f64,
    hard: bool,
) -> Result<BatchPartition> {
    probs.ensure_same_shape(noisy_onehot, "partition_by_entropy")?;
    if !gamma.is_finite() {
        return Err(Error::invalid(format!("gamma must be finite, got {gamma}")));
    }
    let classes = probs.cols();
    let mut part = BatchPartition {
        classes,
        entropies: Vec::with_capacity(probs.rows()),
        low_indices: Vec::new(),
        low_targets: Vec::new(),
        high_indices: Vec::new(),
        high_targets: Vec::new(),
    };
    for (k, row) in probs.iter_rows().enumerate() {
        let h = entropy(row);
        part.entropies.push(h);
        if h <= gamma {
            part.low_indices.push(k);
            if hard {
                let top = argmax(row);
                part.low_targets
                    .extend((0..classes).map(|j| if j == top { 1.0 } else { 0.0 }));
            } else {
                part.low_targets.extend_from_slice(row);
            }
        } else {
            part.high_indices.push(k);
            part.high_targets.extend_from_slice(noisy_onehot.row(k));
        }
    }
    Ok(part)
}

pub fn partition_by_entropy(probs: &Matrix, noisy_onehot: &Matrix, gamma: f64) -> Result<BatchPartition> {
    partition_by_entropy_with(probs, noisy_onehot, gamma, false)
}

/// Mean prediction entropy of `net` over `x`.
pub fn estimate_gamma(net: &MlpNetwork, x: &Matrix) -> Result<f64> {
    let probs = net.predict_proba(x)?;
    Ok(mean_entropy(&probs))
}

pub fn mean_entropy(probs: &Matrix) -> f64 {
    probs.iter_rows().map(entropy).sum::<f64>() / probs.rows() as f64
}

/// Mean prediction entropy split by whether the argmax matches the clean label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyGap {
    pub correct: Option<f64>,
    pub incorrect: Option<f64>,
    pub all: f64,
    pub n_correct: usize,
    pub n_incorrect: usize,
}

pub fn entropy_gap_stats(probs: &Matrix, clean_labels: &[usize]) -> Result<EntropyGap> {
    if probs.rows() != clean_labels.len() {
        return Err(Error::invalid(format!(
            "{} prediction rows but {} labels",
            probs.rows(),
            clean_labels.len()
        )));
    }
    let (mut sum_c, mut sum_i, mut n_c, mut n_i) = (0.0, 0.0, 0usize, 0usize);
    for (row, &y) in probs.iter_rows().zip(clean_labels) {
        let h = entropy(row);
        if argmax(row) == y {
            sum_c += h;
            n_c += 1;
        } else {
            sum_i += h;
            n_i += 1;
        }
    }
    let mean = |s: f64, n: usize| (n > 0).then(|| s / n as f64);
    Ok(EntropyGap {
        correct: mean(sum_c, n_c),
        incorrect: mean(sum_i, n_i),
        all: (sum_c + sum_i) / clean_labels.len() as f64,
        n_correct: n_c,
        n_incorrect: n_i,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::softmax_rows;
    use crate::rng::SeededRng;
    use proptest::prelude::*;

    fn rows(r: &[&[f64]]) -> Matrix {
        Matrix::from_rows(&r.iter().map(|x| x.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn probs_and_labels(rng: &mut SeededRng, n: usize, c: usize) -> (Matrix, Matrix) {
        let logits = Matrix::new(n, c, (0..n * c).map(|_| 3.0 * rng.normal()).collect()).unwrap();
        let labels: Vec<usize> = (0..n).map(|_| rng.below(c)).collect();
        (softmax_rows(&logits).unwrap(), Matrix::one_hot(&labels, c).unwrap())
    }

    #[test]
    fn extreme_thresholds() {
        let mut rng = SeededRng::new(0, 0);
        let (p, y) = probs_and_labels(&mut rng, 20, 4);
        let all_low = partition_by_entropy(&p, &y, 4f64.ln()).unwrap();
        assert_eq!(all_low.low_count(), 20);
        assert_eq!(all_low.high_count(), 0);
        let all_high = partition_by_entropy(&p, &y, -1e-9).unwrap();
        assert_eq!(all_high.low_count(), 0);
        assert_eq!(all_high.high_indices(), (0..20).collect::<Vec<_>>().as_slice());
        for i in 0..20 {
            assert_eq!(all_high.high_target(i), y.row(i));
        }
    }

    #[test]
    fn uniform_rows_sit_on_the_upper_boundary() {
        let p = Matrix::new(3, 10, vec![0.1; 30]).unwrap();
        let y = Matrix::one_hot(&[0, 1, 2], 10).unwrap();
        assert_eq!(partition_by_entropy(&p, &y, 10f64.ln()).unwrap().low_count(), 3);
    }

    #[test]
    fn mixed_example() {
        let mut uniform = vec![0.1; 10];
        let mut one_hot = vec![0.0; 10];
        one_hot[3] = 1.0;
        let mut mid = vec![0.0; 10];
        mid[..3].copy_from_slice(&[0.7, 0.2, 0.1]);
        let p = Matrix::from_rows(&[one_hot, mid.clone(), std::mem::take(&mut uniform)]).unwrap();
        let y = Matrix::one_hot(&[0, 0, 0], 10).unwrap();
        let part = partition_by_entropy(&p, &y, 1.0).unwrap();
        assert_eq!(part.low_indices(), &[0, 1]);
        assert_eq!(part.high_indices(), &[2]);
        assert_eq!(part.low_target(1), mid.as_slice());
        assert_eq!(part.hard_pseudo_labels(), vec![Some(3), Some(0), None]);
    }

    #[test]
    fn hard_targets_are_one_hot() {
        let p = rows(&[&[0.8, 0.2], &[0.5, 0.5]]);
        let y = Matrix::one_hot(&[1, 1], 2).unwrap();
        let part = partition_by_entropy_with(&p, &y, 0.6, true).unwrap();
        assert_eq!(part.low_indices(), &[0]);
        assert_eq!(part.low_target(0), &[1.0, 0.0]);
    }

    #[test]
    fn rejects_shape_mismatch_and_nan_gamma() {
        let p = rows(&[&[0.5, 0.5]]);
        assert!(partition_by_entropy(&p, &Matrix::zeros(2, 2), 0.1).is_err());
        assert!(partition_by_entropy(&p, &p, f64::NAN).is_err());
    }

    #[test]
    fn gamma_of_zero_network_is_ln_c() {
        let net = MlpNetwork::zeros(&[3, 4, 5]).unwrap();
        let x = Matrix::new(2, 3, vec![1.0, 2.0, 3.0, -1.0, 0.0, 1.0]).unwrap();
        assert!((estimate_gamma(&net, &x).unwrap() - 5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn gamma_of_saturated_network_is_near_zero() {
        let mut net = MlpNetwork::zeros(&[1, 3]).unwrap();
        net.biases_mut()[0] = vec![100.0, 0.0, 0.0];
        let x = Matrix::new(4, 1, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        assert!(estimate_gamma(&net, &x).unwrap() < 1e-9);
    }

    #[test]
    fn gamma_half_uniform_half_one_hot() {
        // single input feature switches the output between uniform and saturated
        let mut net = MlpNetwork::zeros(&[1, 4]).unwrap();
        net.weights_mut()[0] = Matrix::new(1, 4, vec![200.0, 0.0, 0.0, 0.0]).unwrap();
        let x = Matrix::new(4, 1, vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        let gamma = estimate_gamma(&net, &x).unwrap();
        assert!((gamma - 4f64.ln() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn entropy_gap_examples() {
        let p = rows(&[&[0.9, 0.1], &[0.5, 0.5], &[0.2, 0.8]]);
        let gap = entropy_gap_stats(&p, &[0, 0, 1]).unwrap();
        assert_eq!(gap.incorrect, None);

        let h = |a: f64| -(a * a.ln() + (1.0 - a) * (1.0 - a).ln());
        let gap = entropy_gap_stats(&p, &[0, 1, 0]).unwrap();
        assert!((gap.correct.unwrap() - h(0.9)).abs() < 1e-12);
        let expected_incorrect = (2f64.ln() + h(0.8)) / 2.0;
        assert!((gap.incorrect.unwrap() - expected_incorrect).abs() < 1e-12);
        let weighted = (gap.correct.unwrap() * 1.0 + gap.incorrect.unwrap() * 2.0) / 3.0;
        assert!((gap.all - weighted).abs() < 1e-12);
        assert!(entropy_gap_stats(&p, &[0]).is_err());
    }

    proptest! {
        #[test]
        fn partition_complete_disjoint_monotone(seed in 0u64..10_000, g1 in -0.5f64..2.5, g2 in -0.5f64..2.5) {
            let mut rng = SeededRng::new(seed, 0);
            let (p, y) = probs_and_labels(&mut rng, 16, 5);
            let (lo, hi) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
            let a = partition_by_entropy(&p, &y, lo).unwrap();
            let b = partition_by_entropy(&p, &y, hi).unwrap();
            let mut all: Vec<usize> = a.low_indices().iter().chain(a.high_indices()).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..16).collect::<Vec<_>>());
            prop_assert!(a.low_indices().iter().all(|i| b.low_indices().contains(i)));
        }
    }
}
