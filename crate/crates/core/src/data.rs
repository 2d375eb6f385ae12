//! Datasets with separate clean (metric-only) and noisy (training) labels.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::math::Matrix;
use crate::rng::SeededRng;

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Matrix,
    clean_labels: Vec<usize>,
    noisy_labels: Vec<usize>,
    classes: usize,
}

/// What a trainer may see: features and noisy labels, never the clean ones.
#[derive(Debug, Clone, Copy)]
pub struct TrainingView<'a> {
    pub features: &'a Matrix,
    pub noisy_labels: &'a [usize],
    pub classes: usize,
}

impl TrainingView<'_> {
    pub fn len(&self) -> usize {
        self.noisy_labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.noisy_labels.is_empty()
    }
}

impl LabeledDataset {
    /// Clean dataset: noisy labels start equal to the clean ones.
    pub fn new(features: Matrix, labels: Vec<usize>, classes: usize) -> Result<Self> {
        if classes < 2 {
            return Err(Error::invalid("a dataset needs at least 2 classes"));
        }
        if features.rows() != labels.len() {
            return Err(Error::invalid(format!(
                "{} feature rows but {} labels",
                features.rows(),
                labels.len()
            )));
        }
        if let Some(y) = labels.iter().find(|&&y| y >= classes) {
            return Err(Error::invalid(format!("label {y} out of range for {classes} classes")));
        }
        if !features.is_finite() {
            return Err(Error::invalid("features must be finite"));
        }
        Ok(Self {
            features,
            noisy_labels: labels.clone(),
            clean_labels: labels,
            classes,
        })
    }

    pub fn with_noisy_labels(mut self, noisy: Vec<usize>) -> Result<Self> {
        if noisy.len() != self.clean_labels.len() {
            return Err(Error::invalid("noisy label count differs from dataset size"));
        }
        if noisy.iter().any(|&y| y >= self.classes) {
            return Err(Error::invalid("noisy label out of range"));
        }
        self.noisy_labels = noisy;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.clean_labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clean_labels.is_empty()
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn clean_labels(&self) -> &[usize] {
        &self.clean_labels
    }

    pub fn noisy_labels(&self) -> &[usize] {
        &self.noisy_labels
    }

    pub fn training_view(&self) -> TrainingView<'_> {
        TrainingView {
            features: &self.features,
            noisy_labels: &self.noisy_labels,
            classes: self.classes,
        }
    }

    /// Fraction of noisy labels that differ from the clean ones.
    pub fn noise_rate(&self) -> f64 {
        let flipped = self
            .clean_labels
            .iter()
            .zip(&self.noisy_labels)
            .filter(|(a, b)| a != b)
            .count();
        flipped as f64 / self.len() as f64
    }

    fn subset(&self, indices: &[usize]) -> Result<Self> {
        Ok(Self {
            features: self.features.select_rows(indices)?,
            clean_labels: indices.iter().map(|&i| self.clean_labels[i]).collect(),
            noisy_labels: indices.iter().map(|&i| self.noisy_labels[i]).collect(),
            classes: self.classes,
        })
    }
}

/// Zero mean and unit variance per column; constant columns are only centered.
pub fn standardize(features: &mut Matrix) {
    let (n, d) = features.shape();
    for j in 0..d {
        let mean = (0..n).map(|i| features.get(i, j)).sum::<f64>() / n as f64;
        let var = (0..n).map(|i| (features.get(i, j) - mean).powi(2)).sum::<f64>() / n as f64;
        let scale = if var > 1e-24 { 1.0 / var.sqrt() } else { 1.0 };
        for i in 0..n {
            let v = (features.get(i, j) - mean) * scale;
            features.set(i, j, v);
        }
    }
}

fn check_generator_args(classes: usize, n_per_class: usize) -> Result<()> {
    if classes < 2 {
        return Err(Error::invalid("generators need at least 2 classes"));
    }
    if n_per_class == 0 {
        return Err(Error::invalid("n_per_class must be positive"));
    }
    Ok(())
}

/// Isotropic unit-variance Gaussian clusters whose means sit on a circle in
/// the first two dimensions, adjacent means `separation` apart. Features are
/// standardized afterwards.
pub fn gen_gaussian_blobs(
    classes: usize,
    n_per_class: usize,
    dim: usize,
    separation: f64,
    rng: &mut SeededRng,
) -> Result<LabeledDataset> {
    check_generator_args(classes, n_per_class)?;
    if dim < 2 {
        return Err(Error::invalid("blobs need dim >= 2"));
    }
    if !(separation >= 0.0 && separation.is_finite()) {
        return Err(Error::invalid(format!("separation must be finite and >= 0, got {separation}")));
    }
    let radius = separation / (2.0 * (PI / classes as f64).sin());
    let n = classes * n_per_class;
    let mut values = Vec::with_capacity(n * dim);
    let mut labels = Vec::with_capacity(n);
    for k in 0..classes {
        let angle = 2.0 * PI * k as f64 / classes as f64;
        let center = [radius * angle.cos(), radius * angle.sin()];
        for _ in 0..n_per_class {
            for j in 0..dim {
                let mu = center.get(j).copied().unwrap_or(0.0);
                values.push(mu + rng.normal());
            }
            labels.push(k);
        }
    }
    let mut features = Matrix::new(n, dim, values)?;
    standardize(&mut features);
    LabeledDataset::new(features, labels, classes)
}

/// Concentric 2-D rings, class `k` at radius `k + 1`, with Gaussian radial
/// jitter of `noise_std`.
pub fn gen_rings(
    classes: usize,
    n_per_class: usize,
    noise_std: f64,
    rng: &mut SeededRng,
) -> Result<LabeledDataset> {
    check_generator_args(classes, n_per_class)?;
    if !(noise_std >= 0.0 && noise_std.is_finite()) {
        return Err(Error::invalid(format!("noise_std must be finite and >= 0, got {noise_std}")));
    }
    let n = classes * n_per_class;
    let mut values = Vec::with_capacity(n * 2);
    let mut labels = Vec::with_capacity(n);
    for k in 0..classes {
        for _ in 0..n_per_class {
            let theta = 2.0 * PI * rng.uniform();
            let r = (k + 1) as f64 + noise_std * rng.normal();
            values.push(r * theta.cos());
            values.push(r * theta.sin());
            labels.push(k);
        }
    }
    let mut features = Matrix::new(n, 2, values)?;
    standardize(&mut features);
    LabeledDataset::new(features, labels, classes)
}

fn load_err(path: &Path, field: &'static str, reason: impl Into<String>) -> Error {
    Error::Load {
        path: path.to_path_buf(),
        field,
        reason: reason.into(),
    }
}

fn read_u32(bytes: &[u8], offset: usize, path: &Path, field: &'static str) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| load_err(path, field, "file truncated in header"))
}

/// Load an IDX image/label pair (MNIST layout). Pixels are scaled to `[0, 1]`
/// and each image flattened to one row; only the first `max_n` items are kept.
pub fn load_idx(images_path: &Path, labels_path: &Path, max_n: Option<usize>) -> Result<LabeledDataset> {
    let images = fs::read(images_path).map_err(|e| Error::io(format!("reading {}", images_path.display()), e))?;
    let labels = fs::read(labels_path).map_err(|e| Error::io(format!("reading {}", labels_path.display()), e))?;

    let magic = read_u32(&images, 0, images_path, "images magic")?;
    if magic != IMAGES_MAGIC {
        return Err(load_err(images_path, "images magic", format!("expected 0x{IMAGES_MAGIC:08x}, found 0x{magic:08x}")));
    }
    let n_images = read_u32(&images, 4, images_path, "images count")? as usize;
    let rows = read_u32(&images, 8, images_path, "images rows")? as usize;
    let cols = read_u32(&images, 12, images_path, "images cols")? as usize;

    let magic = read_u32(&labels, 0, labels_path, "labels magic")?;
    if magic != LABELS_MAGIC {
        return Err(load_err(labels_path, "labels magic", format!("expected 0x{LABELS_MAGIC:08x}, found 0x{magic:08x}")));
    }
    let n_labels = read_u32(&labels, 4, labels_path, "labels count")? as usize;
    if n_images != n_labels {
        return Err(load_err(
            labels_path,
            "item count",
            format!("{n_labels} labels but {n_images} images"),
        ));
    }

    let dim = rows * cols;
    if dim == 0 {
        return Err(load_err(images_path, "images dims", "zero-sized images"));
    }
    let pixels = &images[16..];
    if pixels.len() < n_images * dim {
        return Err(load_err(
            images_path,
            "images data",
            format!("truncated: need {} pixel bytes, found {}", n_images * dim, pixels.len()),
        ));
    }
    let label_bytes = &labels[8..];
    if label_bytes.len() < n_labels {
        return Err(load_err(
            labels_path,
            "labels data",
            format!("truncated: need {n_labels} label bytes, found {}", label_bytes.len()),
        ));
    }

    let n = max_n.map_or(n_images, |m| m.min(n_images));
    if n == 0 {
        return Err(load_err(images_path, "images count", "no items to load"));
    }
    let values = pixels[..n * dim].iter().map(|&p| p as f64 / 255.0).collect();
    let labels: Vec<usize> = label_bytes[..n].iter().map(|&y| y as usize).collect();
    let classes = labels.iter().max().map_or(0, |m| m + 1).max(2);
    LabeledDataset::new(Matrix::new(n, dim, values)?, labels, classes)
}

/// Class-stratified split. The test set takes `round(n · test_fraction)`
/// samples, each class contributing its proportional share (remainders go to
/// the classes with the largest fractional parts).
pub fn train_test_split(
    dataset: &LabeledDataset,
    test_fraction: f64,
    rng: &mut SeededRng,
) -> Result<(LabeledDataset, LabeledDataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::invalid(format!("test_fraction must be in (0, 1), got {test_fraction}")));
    }
    let c = dataset.classes();
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); c];
    for (i, &y) in dataset.clean_labels().iter().enumerate() {
        by_class[y].push(i);
    }
    let total_test = (dataset.len() as f64 * test_fraction).round() as usize;
    let exact: Vec<f64> = by_class.iter().map(|idx| idx.len() as f64 * test_fraction).collect();
    let mut quota: Vec<usize> = exact.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let mut missing = total_test.saturating_sub(quota.iter().sum());
    for &k in order.iter().cycle().take(c * 2) {
        if missing == 0 {
            break;
        }
        if quota[k] < by_class[k].len() {
            quota[k] += 1;
            missing -= 1;
        }
    }

    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for (members, &q) in by_class.iter_mut().zip(&quota) {
        rng.shuffle(members);
        test_idx.extend_from_slice(&members[..q]);
        train_idx.extend_from_slice(&members[q..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    if train_idx.is_empty() || test_idx.is_empty() {
        return Err(Error::invalid("split leaves an empty side"));
    }
    Ok((dataset.subset(&train_idx)?, dataset.subset(&test_idx)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blobs_count_and_determinism() {
        let a = gen_gaussian_blobs(4, 25, 3, 5.0, &mut SeededRng::new(1, 3)).unwrap();
        assert_eq!(a.len(), 100);
        assert_eq!(a.dim(), 3);
        let b = gen_gaussian_blobs(4, 25, 3, 5.0, &mut SeededRng::new(1, 3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.clean_labels(), a.noisy_labels());
    }

    #[test]
    fn blobs_are_standardized() {
        let d = gen_gaussian_blobs(3, 200, 4, 6.0, &mut SeededRng::new(2, 3)).unwrap();
        for j in 0..4 {
            let col: Vec<f64> = (0..d.len()).map(|i| d.features().get(i, j)).collect();
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / col.len() as f64;
            assert!(mean.abs() < 1e-12);
            assert!((var - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn rings_count_and_determinism() {
        let a = gen_rings(3, 40, 0.1, &mut SeededRng::new(5, 3)).unwrap();
        assert_eq!(a.len(), 120);
        assert_eq!(a.dim(), 2);
        assert_eq!(a, gen_rings(3, 40, 0.1, &mut SeededRng::new(5, 3)).unwrap());
    }

    #[test]
    fn generator_argument_errors() {
        let mut rng = SeededRng::new(0, 0);
        assert!(gen_gaussian_blobs(1, 10, 2, 1.0, &mut rng).is_err());
        assert!(gen_gaussian_blobs(3, 10, 1, 1.0, &mut rng).is_err());
        assert!(gen_rings(3, 0, 0.1, &mut rng).is_err());
    }

    #[test]
    fn split_is_disjoint_and_stratified() {
        let d = gen_gaussian_blobs(3, 50, 2, 4.0, &mut SeededRng::new(1, 3)).unwrap();
        let (train, test) = train_test_split(&d, 0.2, &mut SeededRng::new(1, 2)).unwrap();
        assert_eq!(train.len() + test.len(), 150);
        assert_eq!(test.len(), 30);
        for k in 0..3 {
            let n = test.clean_labels().iter().filter(|&&y| y == k).count();
            assert!((n as i64 - 10).abs() <= 1);
        }
        // rows are unique points, so disjointness shows up as no shared rows
        for r in test.features().iter_rows() {
            assert!(!train.features().iter_rows().any(|t| t == r));
        }
        let again = train_test_split(&d, 0.2, &mut SeededRng::new(1, 2)).unwrap();
        assert_eq!(again.0, train);
    }

    #[test]
    fn split_with_uneven_classes_hits_total() {
        let features = Matrix::new(7, 1, (0..7).map(f64::from).collect()).unwrap();
        let d = LabeledDataset::new(features, vec![0, 0, 0, 1, 1, 2, 2], 3).unwrap();
        let (train, test) = train_test_split(&d, 2.0 / 7.0, &mut SeededRng::new(0, 2)).unwrap();
        assert_eq!(test.len(), 2);
        assert_eq!(train.len(), 5);
    }

    #[test]
    fn dataset_validation() {
        let f = Matrix::zeros(2, 2);
        assert!(LabeledDataset::new(f.clone(), vec![0, 2], 2).is_err());
        assert!(LabeledDataset::new(f.clone(), vec![0], 2).is_err());
        let d = LabeledDataset::new(f, vec![0, 1], 2).unwrap();
        assert!(d.clone().with_noisy_labels(vec![0]).is_err());
        let d = d.with_noisy_labels(vec![1, 1]).unwrap();
        assert_eq!(d.noise_rate(), 0.5);
        assert_eq!(d.training_view().noisy_labels, &[1, 1]);
    }
}
