//! IDX parsing, splits and generators.

use std::fs;
use std::path::{Path, PathBuf};

use clc::data::{gen_gaussian_blobs, gen_rings, load_idx, train_test_split};
use clc::{Error, SeededRng};

fn idx_images(n: u32, rows: u32, cols: u32, pixels: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    for v in [0x0803, n, rows, cols] {
        out.extend_from_slice(&u32::to_be_bytes(v));
    }
    out.extend_from_slice(pixels);
    out
}

fn idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    for v in [0x0801, labels.len() as u32] {
        out.extend_from_slice(&u32::to_be_bytes(v));
    }
    out.extend_from_slice(labels);
    out
}

fn write_pair(dir: &Path, images: &[u8], labels: &[u8]) -> (PathBuf, PathBuf) {
    let (i, l) = (dir.join("images"), dir.join("labels"));
    fs::write(&i, images).unwrap();
    fs::write(&l, labels).unwrap();
    (i, l)
}

fn field_of(e: Error) -> &'static str {
    match e {
        Error::Load { field, .. } => field,
        other => panic!("expected a load error, got {other}"),
    }
}

#[test]
fn tiny_idx_pair_loads_and_scales() {
    let tmp = tempfile::tempdir().unwrap();
    let pixels: Vec<u8> = (0..12).map(|v| (v * 23) as u8).collect();
    let (i, l) = write_pair(tmp.path(), &idx_images(3, 2, 2, &pixels), &idx_labels(&[2, 0, 1]));
    let ds = load_idx(&i, &l, None).unwrap();
    assert_eq!((ds.len(), ds.dim(), ds.classes()), (3, 4, 3));
    assert_eq!(ds.clean_labels(), &[2, 0, 1]);
    assert_eq!(ds.features().get(1, 0), pixels[4] as f64 / 255.0);
    let two = load_idx(&i, &l, Some(2)).unwrap();
    assert_eq!(two.len(), 2);
}

#[test]
fn malformed_idx_files_name_the_offending_field() {
    let tmp = tempfile::tempdir().unwrap();
    let good_images = idx_images(2, 2, 2, &[0; 8]);
    let good_labels = idx_labels(&[0, 1]);

    let mut bad_magic = good_images.clone();
    bad_magic[3] = 0x04;
    let (i, l) = write_pair(tmp.path(), &bad_magic, &good_labels);
    assert_eq!(field_of(load_idx(&i, &l, None).unwrap_err()), "images magic");

    let mut bad_label_magic = good_labels.clone();
    bad_label_magic[2] = 0x09;
    let (i, l) = write_pair(tmp.path(), &good_images, &bad_label_magic);
    assert_eq!(field_of(load_idx(&i, &l, None).unwrap_err()), "labels magic");

    let (i, l) = write_pair(tmp.path(), &good_images[..good_images.len() - 1], &good_labels);
    assert_eq!(field_of(load_idx(&i, &l, None).unwrap_err()), "images data");

    let (i, l) = write_pair(tmp.path(), &good_images, &idx_labels(&[0, 1, 1]));
    assert_eq!(field_of(load_idx(&i, &l, None).unwrap_err()), "item count");

    let (i, l) = write_pair(tmp.path(), &good_images[..6], &good_labels);
    assert!(matches!(load_idx(&i, &l, None), Err(Error::Load { .. })));

    assert!(matches!(load_idx(&tmp.path().join("none"), &l, None), Err(Error::Io { .. })));
}

#[test]
fn bundled_mnist_subset_has_the_expected_shape() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist");
    let ds = load_idx(&root.join("images-idx3-ubyte"), &root.join("labels-idx1-ubyte"), Some(5000)).unwrap();
    assert_eq!((ds.len(), ds.dim(), ds.classes()), (5000, 784, 10));
    let v = ds.features().values();
    assert!(v.iter().all(|&p| (0.0..=1.0).contains(&p)));
    assert!(v.contains(&0.0) && v.iter().any(|&p| p > 0.99));
}

#[test]
fn split_is_disjoint_stratified_and_deterministic() {
    let ds = gen_gaussian_blobs(3, 50, 2, 4.0, &mut SeededRng::new(0, 3)).unwrap();
    let (train, test) = train_test_split(&ds, 0.3, &mut SeededRng::new(0, 2)).unwrap();
    assert_eq!(train.len() + test.len(), 150);
    assert_eq!(test.len(), 45);
    for k in 0..3 {
        let count = test.clean_labels().iter().filter(|&&y| y == k).count();
        assert!((count as i64 - 15).abs() <= 1);
    }
    // Disjoint: no feature row appears on both sides.
    for row in test.features().iter_rows() {
        assert!(train.features().iter_rows().all(|r| r != row));
    }
    let (again, _) = train_test_split(&ds, 0.3, &mut SeededRng::new(0, 2)).unwrap();
    assert_eq!(train, again);
    assert!(train_test_split(&ds, 1.0, &mut SeededRng::new(0, 2)).is_err());
}

#[test]
fn generators_are_deterministic_and_sized() {
    let a = gen_rings(4, 25, 0.1, &mut SeededRng::new(9, 3)).unwrap();
    let b = gen_rings(4, 25, 0.1, &mut SeededRng::new(9, 3)).unwrap();
    assert_eq!(a, b);
    assert_eq!((a.len(), a.dim(), a.classes()), (100, 2, 4));
    assert!(gen_gaussian_blobs(1, 10, 2, 1.0, &mut SeededRng::new(0, 3)).is_err());
}
