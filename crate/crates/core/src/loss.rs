//! Loss gradients with respect to pre-softmax logits.
//!
//! All functions take probabilities already passed through softmax and return
//! `∂L/∂z`, ready for [`crate::net::MlpNetwork::backward`].

use crate::error::Result;
use crate::math::Matrix;

/// Gradient of mean soft-target cross-entropy through softmax: `(q − t) / n`.
pub fn softce_grad_logits(targets: &Matrix, probs: &Matrix) -> Result<Matrix> {
    targets.ensure_same_shape(probs, "softce_grad_logits")?;
    let n = probs.rows() as f64;
    let mut grad = Matrix::zeros(probs.rows(), probs.cols());
    for r in 0..probs.rows() {
        softce_row(grad.row_mut(r), targets.row(r), probs.row(r), n, 1.0);
    }
    Ok(grad)
}

/// Gradient of the mean Shannon entropy through softmax:
/// `∂H/∂z_k = −q_k (ln q_k + H(q))`, divided by `n`.
pub fn entropy_grad_logits(probs: &Matrix) -> Result<Matrix> {
    let n = probs.rows() as f64;
    let mut grad = Matrix::zeros(probs.rows(), probs.cols());
    for r in 0..probs.rows() {
        entropy_row(grad.row_mut(r), probs.row(r), n, 1.0);
    }
    Ok(grad)
}

/// `out += scale · (q − t) / denom`.
#[inline]
pub(crate) fn softce_row(out: &mut [f64], target: &[f64], probs: &[f64], denom: f64, scale: f64) {
    for ((o, &t), &q) in out.iter_mut().zip(target).zip(probs) {
        *o += scale * ((q - t) / denom);
    }
}

/// `out += scale · ∂H/∂z / denom`.
#[inline]
pub(crate) fn entropy_row(out: &mut [f64], probs: &[f64], denom: f64, scale: f64) {
    let h: f64 = -probs
        .iter()
        .filter(|&&q| q > 0.0)
        .map(|&q| q * q.ln())
        .sum::<f64>();
    for (o, &q) in out.iter_mut().zip(probs) {
        if q > 0.0 {
            *o += scale * (-q * (q.ln() + h) / denom);
        }
    }
}

/// Per-row cross-entropy of `probs` against hard `labels`, clamped like
/// [`crate::math::cross_entropy`].
pub fn per_sample_ce(probs: &Matrix, labels: &[usize]) -> Vec<f64> {
    labels
        .iter()
        .enumerate()
        .map(|(r, &y)| -probs.get(r, y).max(crate::math::LOG_EPS).ln())
        .collect()
}
