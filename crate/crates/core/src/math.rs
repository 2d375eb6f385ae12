//! Dense row-major matrices and the probability transforms built on them.

use crate::error::{Error, Result};

/// Lower clamp applied to probabilities before taking a logarithm.
pub const LOG_EPS: f64 = 1e-12;

/// Dense row-major matrix of `f64`. Always at least 1×1.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid(format!(
                "matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if values.len() != rows * cols {
            return Err(Error::invalid(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                values.len()
            )));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix must be at least 1x1");
        Self {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("ragged rows"));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    /// One-hot encoding of `labels` over `classes` columns.
    pub fn one_hot(labels: &[usize], classes: usize) -> Result<Self> {
        let mut m = Self::new(
            labels.len(),
            classes,
            vec![0.0; labels.len() * classes],
        )?;
        for (r, &label) in labels.iter().enumerate() {
            if label >= classes {
                return Err(Error::invalid(format!(
                    "label {label} out of range for {classes} classes"
                )));
            }
            m.values[r * classes + label] = 1.0;
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.values[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.cols)
    }

    /// Gather the given rows, in order. `indices` must be non-empty.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::invalid("cannot select zero rows"));
        }
        let mut values = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            if i >= self.rows {
                return Err(Error::invalid(format!(
                    "row {i} out of range for {} rows",
                    self.rows
                )));
            }
            values.extend_from_slice(self.row(i));
        }
        Self::new(indices.len(), self.cols, values)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }

    pub fn ensure_same_shape(&self, other: &Matrix, what: &str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::invalid(format!(
                "{what}: shape {:?} does not match {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(())
    }

    /// `self · rhs`.
    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.rows {
            return Err(Error::invalid(format!(
                "matmul: {:?} x {:?}",
                self.shape(),
                rhs.shape()
            )));
        }
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        gemm(
            self.rows,
            self.cols,
            rhs.cols,
            (&self.values, self.cols as isize, 1),
            (&rhs.values, rhs.cols as isize, 1),
            &mut out,
        );
        Ok(out)
    }

    /// `selfᵀ · rhs`.
    pub fn t_matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.rows != rhs.rows {
            return Err(Error::invalid(format!(
                "t_matmul: {:?}ᵀ x {:?}",
                self.shape(),
                rhs.shape()
            )));
        }
        let mut out = Matrix::zeros(self.cols, rhs.cols);
        gemm(
            self.cols,
            self.rows,
            rhs.cols,
            (&self.values, 1, self.cols as isize),
            (&rhs.values, rhs.cols as isize, 1),
            &mut out,
        );
        Ok(out)
    }

    /// `self · rhsᵀ`.
    pub fn matmul_t(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.cols {
            return Err(Error::invalid(format!(
                "matmul_t: {:?} x {:?}ᵀ",
                self.shape(),
                rhs.shape()
            )));
        }
        let mut out = Matrix::zeros(self.rows, rhs.rows);
        gemm(
            self.rows,
            self.cols,
            rhs.rows,
            (&self.values, self.cols as isize, 1),
            (&rhs.values, 1, rhs.cols as isize),
            &mut out,
        );
        Ok(out)
    }
}

/// `out = a · b` with `a` m×k and `b` k×n given as (data, row stride, col stride).
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: (&[f64], isize, isize),
    b: (&[f64], isize, isize),
    out: &mut Matrix,
) {
    debug_assert_eq!(out.shape(), (m, n));
    // SAFETY: the shapes were validated by the callers and the strides
    // describe in-bounds row-major or transposed views of the slices.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.0.as_ptr(),
            a.1,
            a.2,
            b.0.as_ptr(),
            b.1,
            b.2,
            0.0,
            out.values.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Row-wise softmax with per-row max subtraction.
pub fn softmax_rows(logits: &Matrix) -> Result<Matrix> {
    if !logits.is_finite() {
        return Err(Error::invalid("softmax of non-finite logits"));
    }
    let mut out = logits.clone();
    for row in out.values.chunks_exact_mut(out.cols) {
        softmax_in_place(row);
    }
    Ok(out)
}

pub(crate) fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

/// Shannon entropy (nats) of one probability row, clamped to `[0, ln c]`.
/// `0 · ln 0` is taken as 0.
#[inline]
pub fn entropy(row: &[f64]) -> f64 {
    let h: f64 = -row
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>();
    h.clamp(0.0, (row.len() as f64).ln())
}

pub fn shannon_entropy_rows(probs: &Matrix) -> Result<Vec<f64>> {
    probs
        .iter_rows()
        .enumerate()
        .map(|(r, row)| {
            check_probability_row(row, r)?;
            Ok(entropy(row))
        })
        .collect()
}

fn check_probability_row(row: &[f64], r: usize) -> Result<()> {
    if let Some(p) = row.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(Error::invalid(format!(
            "row {r}: {p} is not a probability"
        )));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("row {r} sums to {sum}, not 1")));
    }
    Ok(())
}

/// Cross-entropy of one target row against one prediction row.
#[inline]
pub fn cross_entropy_row(target: &[f64], probs: &[f64]) -> f64 {
    -target
        .iter()
        .zip(probs)
        .filter(|(&t, _)| t != 0.0)
        .map(|(&t, &q)| t * q.max(LOG_EPS).ln())
        .sum::<f64>()
}

/// Mean over rows of `−Σ t log q`, with `q` clamped below at [`LOG_EPS`].
pub fn cross_entropy(targets: &Matrix, probs: &Matrix) -> Result<f64> {
    targets.ensure_same_shape(probs, "cross_entropy")?;
    let total: f64 = targets
        .iter_rows()
        .zip(probs.iter_rows())
        .map(|(t, q)| cross_entropy_row(t, q))
        .sum();
    Ok(total / targets.rows() as f64)
}

/// Index of the largest entry; ties go to the lowest index.
#[inline]
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

pub fn argmax_rows(m: &Matrix) -> Vec<usize> {
    m.iter_rows().map(argmax).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn constructor_checks_length() {
        assert!(Matrix::new(2, 2, vec![1.0; 3]).is_err());
        assert!(Matrix::new(0, 2, vec![]).is_err());
    }

    #[test]
    fn softmax_examples() {
        let p = softmax_rows(&m(&[&[0.0, 0.0]])).unwrap();
        assert_eq!(p.row(0), &[0.5, 0.5]);

        let p = softmax_rows(&m(&[&[1000.0, 0.0]])).unwrap();
        assert!((p.get(0, 0) - 1.0).abs() < 1e-12);
        assert!(p.get(0, 1).abs() < 1e-12);

        let p = softmax_rows(&m(&[&[2f64.ln(), 0.0]])).unwrap();
        assert!((p.get(0, 0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((p.get(0, 1) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn softmax_rejects_non_finite() {
        assert!(softmax_rows(&m(&[&[f64::NAN, 0.0]])).is_err());
        assert!(softmax_rows(&m(&[&[f64::INFINITY, 0.0]])).is_err());
    }

    #[test]
    fn entropy_examples() {
        let h = shannon_entropy_rows(&m(&[
            &[0.0, 1.0, 0.0],
            &[0.7, 0.2, 0.1],
            &[0.1; 10][..3],
        ]));
        // last row does not sum to one
        assert!(h.is_err());

        let h = shannon_entropy_rows(&m(&[&[0.0, 1.0, 0.0], &[0.7, 0.2, 0.1]])).unwrap();
        assert_eq!(h[0], 0.0);
        // -(0.7 ln 0.7 + 0.2 ln 0.2 + 0.1 ln 0.1) = 0.8018185525…, i.e. 0.801819 to six places
        assert!((h[1] - 0.801_818_552_543_337).abs() < 1e-12);
        assert_eq!(format!("{:.6}", h[1]), "0.801819");

        let uniform = Matrix::new(1, 10, vec![0.1; 10]).unwrap();
        let h = shannon_entropy_rows(&uniform).unwrap();
        assert!((h[0] - 10f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn entropy_rejects_negative() {
        assert!(shannon_entropy_rows(&m(&[&[-0.1, 1.1]])).is_err());
    }

    #[test]
    fn cross_entropy_examples() {
        let onehot = m(&[&[0.0, 1.0]]);
        assert_eq!(cross_entropy(&onehot, &onehot).unwrap(), 0.0);

        let q = m(&[&[0.2, 0.3, 0.5]]);
        let t = m(&[&[0.0, 1.0, 0.0]]);
        assert!((cross_entropy(&t, &q).unwrap() + 0.3f64.ln()).abs() < 1e-15);

        let half = m(&[&[0.5, 0.5]]);
        assert!((cross_entropy(&half, &half).unwrap() - 2f64.ln()).abs() < 1e-12);

        assert!(cross_entropy(&half, &q).is_err());
    }

    #[test]
    fn cross_entropy_clamps_saturated_predictions() {
        let ce = cross_entropy(&m(&[&[1.0, 0.0]]), &m(&[&[0.0, 1.0]])).unwrap();
        assert!((ce - (-LOG_EPS.ln())).abs() < 1e-9);
    }

    #[test]
    fn argmax_examples() {
        assert_eq!(argmax_rows(&m(&[&[0.1, 0.9]])), vec![1]);
        assert_eq!(argmax_rows(&m(&[&[0.5, 0.5]])), vec![0]);
        let eye = m(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        assert_eq!(argmax_rows(&eye), vec![0, 1, 2]);
    }

    #[test]
    fn matmul_variants_agree_with_naive() {
        let a = m(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]]);
        let b = m(&[&[1.0, 0.5], &[-1.0, 2.0], &[0.0, 3.0]]);
        let ab = a.matmul(&b).unwrap();
        assert_eq!(ab, m(&[&[-1.0, 13.5], &[-1.0, 30.0]]));

        let at = m(&[&[1.0, 4.0], &[2.0, 5.0], &[3.0, 6.0]]);
        assert_eq!(at.t_matmul(&b).unwrap(), ab);

        let bt = m(&[&[1.0, -1.0, 0.0], &[0.5, 2.0, 3.0]]);
        assert_eq!(a.matmul_t(&bt).unwrap(), ab);

        assert!(a.matmul(&a).is_err());
    }

    fn logits_strategy() -> impl Strategy<Value = (usize, Vec<f64>)> {
        (2usize..8).prop_flat_map(|c| (Just(c), prop::collection::vec(-30.0f64..30.0, c)))
    }

    proptest! {
        #[test]
        fn softmax_rows_are_distributions((c, logits) in logits_strategy()) {
            let p = softmax_rows(&Matrix::new(1, c, logits).unwrap()).unwrap();
            let sum: f64 = p.row(0).iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-12);
            prop_assert!(p.row(0).iter().all(|&v| v >= 0.0));
        }

        #[test]
        fn entropy_bounds_and_gibbs((c, a) in logits_strategy(), seed in 0u64..1000) {
            let p = softmax_rows(&Matrix::new(1, c, a.clone()).unwrap()).unwrap();
            let shifted: Vec<f64> = a.iter().enumerate().map(|(i, v)| v * 0.5 + (i as f64 + seed as f64).sin()).collect();
            let q = softmax_rows(&Matrix::new(1, c, shifted).unwrap()).unwrap();
            let h = shannon_entropy_rows(&p).unwrap()[0];
            prop_assert!(h >= 0.0 && h <= (c as f64).ln());
            let ce = cross_entropy(&p, &q).unwrap();
            prop_assert!(ce >= h - 1e-9);
        }
    }
}
