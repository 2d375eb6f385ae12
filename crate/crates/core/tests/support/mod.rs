//! Checks shared by the focused test files and the acceptance report.
//!
//! Each suite returns `Ok(detail)` or `Err(reason)` so it can be asserted in
//! a `#[test]` or printed as one line of the acceptance report.

#![allow(dead_code)]

use std::path::Path;

use clc::data::{gen_gaussian_blobs, train_test_split};
use clc::harness::{run_config, ExperimentConfig};
use clc::math::{entropy, softmax_rows};
use clc::noise::{confusion_matrix, inject_noise, NoiseKind, NoiseSpec};
use clc::rng::streams;
use clc::select::{partition_by_entropy, BatchPartition};
use clc::train::{
    bootstrap_loss, clc_batch_loss, codistill_loss, forward_loss, subset_ce, train_bootstrap, train_clc,
    train_codistillation, train_coteaching, train_forward, train_self_paced, train_slc, train_standard,
    BaselineConfig, ClcConfig, NetStreams, TrainOutcome, TrainSettings,
};
use clc::{GammaPolicy, LabeledDataset, Matrix, MlpNetwork, SeededRng, TransitionMatrix};

// ---------------------------------------------------------------------------
// Gradient oracle

/// Central-difference step.
const FD_STEP: f64 = 1e-5;
/// Gradients smaller than this are compared absolutely rather than
/// relatively: below it the central difference is dominated by rounding.
const FD_FLOOR: f64 = 1e-5;

pub struct GradCase {
    pub net: MlpNetwork,
    pub x: Matrix,
    pub labels: Vec<usize>,
    pub onehot: Matrix,
    pub partner_probs: Matrix,
}

pub fn grad_case(seed: u64) -> GradCase {
    let (n, d, c) = (9, 5, 4);
    let mut rng = SeededRng::new(seed, 100);
    let mut net = MlpNetwork::init(&[d, 7, 6, c], &mut rng).unwrap();
    // Fresh networks have zero biases; a sample whose hidden layer is
    // entirely inactive then sits exactly on every downstream ReLU kink,
    // where finite differences are meaningless. Random biases avoid that.
    for b in net.biases_mut().iter_mut().flatten() {
        *b = 0.1 * rng.normal();
    }
    let partner = MlpNetwork::init(&[d, 7, 6, c], &mut rng).unwrap();
    let x = Matrix::new(n, d, (0..n * d).map(|_| rng.normal()).collect()).unwrap();
    let labels: Vec<usize> = (0..n).map(|_| rng.below(c)).collect();
    let onehot = Matrix::one_hot(&labels, c).unwrap();
    let partner_probs = partner.predict_proba(&x).unwrap();
    GradCase {
        net,
        x,
        labels,
        onehot,
        partner_probs,
    }
}

/// Worst relative error between the backpropagated gradient of
/// `loss(softmax(net(x)))` and its central finite difference, over every
/// parameter of `net`.
pub fn fd_max_rel_error(net: &MlpNetwork, x: &Matrix, loss: &dyn Fn(&Matrix) -> (f64, Matrix)) -> f64 {
    let (logits, cache) = net.forward(x).unwrap();
    let (_, grad_logits) = loss(&softmax_rows(&logits).unwrap());
    let analytic = net.backward(&cache, &grad_logits).unwrap().flat();
    let value = |n: &MlpNetwork| loss(&n.predict_proba(x).unwrap()).0;

    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    for (i, &a) in analytic.iter().enumerate() {
        let orig = *probe.parameter_mut(i);
        *probe.parameter_mut(i) = orig + FD_STEP;
        let up = value(&probe);
        *probe.parameter_mut(i) = orig - FD_STEP;
        let down = value(&probe);
        *probe.parameter_mut(i) = orig;
        let numeric = (up - down) / (2.0 * FD_STEP);
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(FD_FLOOR);
        worst = worst.max(rel);
    }
    worst
}

/// Partition whose threshold sits at the median entropy, so both sides are
/// populated.
pub fn median_partition(probs: &Matrix, onehot: &Matrix) -> BatchPartition {
    let mut h: Vec<f64> = probs.iter_rows().map(entropy).collect();
    h.sort_by(f64::total_cmp);
    partition_by_entropy(probs, onehot, h[h.len() / 2]).unwrap()
}

/// Worst finite-difference error per loss term over `seeds`.
pub fn gradient_suite(seeds: std::ops::Range<u64>) -> Vec<(&'static str, f64)> {
    type Term = (&'static str, Box<dyn Fn(&GradCase) -> Objective>);
    let terms: Vec<Term> = vec![
        (
            "cross-entropy",
            Box::new(|c: &GradCase| {
                let t = c.onehot.clone();
                Box::new(move |p: &Matrix| subset_ce(p, &t, None))
            }),
        ),
        (
            "cross-entropy on a subset",
            Box::new(|c: &GradCase| {
                let t = c.onehot.clone();
                Box::new(move |p: &Matrix| subset_ce(p, &t, Some(&[0, 2, 3, 7])))
            }),
        ),
        (
            "clc low-set pseudo-label term",
            Box::new(|c: &GradCase| clc_term(c, 0.0, 0.0)),
        ),
        ("clc entropy term", Box::new(|c: &GradCase| clc_only_entropy(c))),
        (
            "clc high-set label term",
            Box::new(|c: &GradCase| clc_only_high(c)),
        ),
        ("clc full objective", Box::new(|c: &GradCase| clc_term(c, 0.1, 0.5))),
        (
            "bootstrap",
            Box::new(|c: &GradCase| {
                let t = c.onehot.clone();
                Box::new(move |p: &Matrix| bootstrap_loss(p, &t, 0.8))
            }),
        ),
        (
            "forward correction",
            Box::new(|c: &GradCase| {
                let labels = c.labels.clone();
                let t = TransitionMatrix::from_rows(vec![
                    vec![0.7, 0.1, 0.1, 0.1],
                    vec![0.05, 0.8, 0.15, 0.0],
                    vec![0.0, 0.3, 0.6, 0.1],
                    vec![0.2, 0.0, 0.0, 0.8],
                ])
                .unwrap();
                Box::new(move |p: &Matrix| forward_loss(p, &labels, &t))
            }),
        ),
        (
            "co-distillation",
            Box::new(|c: &GradCase| {
                let (t, partner) = (c.onehot.clone(), c.partner_probs.clone());
                Box::new(move |p: &Matrix| codistill_loss(p, &t, &partner, 0.7))
            }),
        ),
    ];

    terms
        .iter()
        .map(|(name, make)| {
            let worst = seeds
                .clone()
                .map(|s| {
                    let case = grad_case(s);
                    let loss = make(&case);
                    fd_max_rel_error(&case.net, &case.x, &*loss)
                })
                .fold(0.0, f64::max);
            (*name, worst)
        })
        .collect()
}

/// Scalar loss of the logits with its gradient.
type Objective = Box<dyn Fn(&Matrix) -> (f64, Matrix)>;

fn clc_partitions(c: &GradCase) -> (BatchPartition, BatchPartition) {
    let own = median_partition(&c.net.predict_proba(&c.x).unwrap(), &c.onehot);
    let partner = median_partition(&c.partner_probs, &c.onehot);
    (partner, own)
}

/// CLC objective with both partitions frozen at the base point (selection is
/// piecewise constant, so it has no gradient).
fn clc_term(c: &GradCase, alpha: f64, beta: f64) -> Objective {
    let (partner, own) = clc_partitions(c);
    let t = c.onehot.clone();
    Box::new(move |p: &Matrix| {
        let (l, g) = clc_batch_loss(p, &partner, &own, &t, alpha, beta).unwrap();
        (l.total, g)
    })
}

/// Entropy term alone: the objective with the other two terms subtracted.
fn clc_only_entropy(c: &GradCase) -> Objective {
    let (partner, own) = clc_partitions(c);
    let t = c.onehot.clone();
    Box::new(move |p: &Matrix| {
        let (with, mut g) = clc_batch_loss(p, &partner, &own, &t, 1.0, 0.0).unwrap();
        let (without, g0) = clc_batch_loss(p, &partner, &own, &t, 0.0, 0.0).unwrap();
        for (a, b) in g.values_mut().iter_mut().zip(g0.values()) {
            *a -= b;
        }
        (with.total - without.total, g)
    })
}

fn clc_only_high(c: &GradCase) -> Objective {
    let (partner, own) = clc_partitions(c);
    let t = c.onehot.clone();
    Box::new(move |p: &Matrix| {
        let (with, mut g) = clc_batch_loss(p, &partner, &own, &t, 0.0, 1.0).unwrap();
        let (without, g0) = clc_batch_loss(p, &partner, &own, &t, 0.0, 0.0).unwrap();
        for (a, b) in g.values_mut().iter_mut().zip(g0.values()) {
            *a -= b;
        }
        (with.total - without.total, g)
    })
}

// ---------------------------------------------------------------------------
// Entropy and partition properties

pub fn random_probs(rng: &mut SeededRng, n: usize, c: usize) -> Matrix {
    // Mix sharp and flat rows by scaling the logits.
    let temp = 0.1 + 8.0 * rng.uniform();
    let logits = Matrix::new(n, c, (0..n * c).map(|_| temp * rng.normal()).collect()).unwrap();
    softmax_rows(&logits).unwrap()
}

pub fn partition_suite(cases: usize, seed: u64) -> Result<String, String> {
    let ln = |c: usize| (c as f64).ln();
    for c in 2..=10 {
        let one_hot = Matrix::one_hot(&[c - 1], c).unwrap();
        if entropy(one_hot.row(0)) != 0.0 {
            return Err(format!("one-hot entropy nonzero for c={c}"));
        }
        let uniform = vec![1.0 / c as f64; c];
        if (entropy(&uniform) - ln(c)).abs() > 1e-12 {
            return Err(format!("uniform entropy != ln {c}"));
        }
    }

    let mut rng = SeededRng::new(seed, 200);
    for case in 0..cases {
        let c = 2 + rng.below(9);
        let n = 1 + rng.below(40);
        let probs = random_probs(&mut rng, n, c);
        let labels: Vec<usize> = (0..n).map(|_| rng.below(c)).collect();
        let onehot = Matrix::one_hot(&labels, c).unwrap();
        for row in probs.iter_rows() {
            let h = entropy(row);
            if !(0.0..=ln(c)).contains(&h) {
                return Err(format!("case {case}: entropy {h} outside [0, ln {c}]"));
            }
        }
        let g1 = -0.2 + (ln(c) + 0.4) * rng.uniform();
        let g2 = g1 + rng.uniform();
        let p1 = partition_by_entropy(&probs, &onehot, g1).unwrap();
        let p2 = partition_by_entropy(&probs, &onehot, g2).unwrap();
        for p in [&p1, &p2] {
            let mut all: Vec<usize> = p.low_indices().iter().chain(p.high_indices()).copied().collect();
            all.sort_unstable();
            if all != (0..n).collect::<Vec<_>>() {
                return Err(format!("case {case}: partition not complete and disjoint"));
            }
        }
        if !p1.low_indices().iter().all(|i| p2.low_indices().contains(i)) {
            return Err(format!("case {case}: low set shrank as gamma grew ({g1} -> {g2})"));
        }
    }
    Ok(format!("{cases} randomized cases"))
}

// ---------------------------------------------------------------------------
// Noise model

pub fn noise_suite() -> Result<String, String> {
    for c in [2, 3, 5, 10] {
        for r in [0.0, 0.2, 0.45, 0.5, 0.8] {
            let specs = [
                NoiseSpec::new(NoiseKind::Symmetric, r, 0),
                NoiseSpec::new(NoiseKind::Pairwise, r, 0),
                NoiseSpec::new(NoiseKind::Asymmetric, r, 0),
            ];
            for spec in specs {
                let t = TransitionMatrix::build(&spec, c).map_err(|e| e.to_string())?;
                for (i, row) in t.rows().iter().enumerate() {
                    let s: f64 = row.iter().sum();
                    if (s - 1.0).abs() > 1e-12 {
                        return Err(format!("{:?} c={c} r={r}: row {i} sums to {s}", spec.kind));
                    }
                }
            }
        }
    }

    let n = 50_000;
    let c = 10;
    let mut worst_sigma: f64 = 0.0;
    let mut rate = 0.0;
    for kind in [NoiseKind::Symmetric, NoiseKind::Pairwise] {
        let ratio = if kind == NoiseKind::Symmetric { 0.5 } else { 0.45 };
        let t = TransitionMatrix::build(&NoiseSpec::new(kind, ratio, 7), c).unwrap();
        let clean: Vec<usize> = (0..n).map(|i| i % c).collect();
        let noisy = inject_noise(&clean, &t, &mut SeededRng::new(7, streams::NOISE)).unwrap();
        let flipped = clean.iter().zip(&noisy).filter(|(a, b)| a != b).count() as f64 / n as f64;
        if kind == NoiseKind::Symmetric {
            rate = flipped;
            if (flipped - 0.5).abs() > 0.01 {
                return Err(format!("symmetric r=0.5 corrupted {flipped:.4} of {n} labels"));
            }
        }
        let cm = confusion_matrix(&clean, &noisy, c).unwrap();
        for (i, row) in cm.counts().iter().enumerate() {
            let total: u64 = row.iter().sum();
            for (j, &count) in row.iter().enumerate() {
                let p = t.get(i, j);
                let observed = count as f64 / total as f64;
                if p == 0.0 || p == 1.0 {
                    if observed != p {
                        return Err(format!("{kind:?}: cell ({i},{j}) has {observed}, T says {p}"));
                    }
                    continue;
                }
                let sigma = (p * (1.0 - p) / total as f64).sqrt();
                let z = (observed - p).abs() / sigma;
                worst_sigma = worst_sigma.max(z);
                if z > 3.0 {
                    return Err(format!("{kind:?}: cell ({i},{j}) off by {z:.2} sigma"));
                }
            }
        }
    }
    Ok(format!("corruption rate {rate:.4}, worst cell {worst_sigma:.2} sigma"))
}

// ---------------------------------------------------------------------------
// Degenerate collapses

/// Small noisy blob problem used by trajectory comparisons.
pub fn small_problem(seed: u64, ratio: f64) -> (LabeledDataset, LabeledDataset) {
    let full = gen_gaussian_blobs(3, 60, 4, 3.0, &mut SeededRng::new(seed, streams::DATA)).unwrap();
    let (train, test) = train_test_split(&full, 0.25, &mut SeededRng::new(seed, streams::SPLIT)).unwrap();
    let t = TransitionMatrix::build(&NoiseSpec::new(NoiseKind::Symmetric, ratio, seed), 3).unwrap();
    let noisy = inject_noise(train.clean_labels(), &t, &mut SeededRng::new(seed, streams::NOISE)).unwrap();
    (train.with_noisy_labels(noisy).unwrap(), test)
}

pub fn small_settings(seed: u64) -> TrainSettings {
    TrainSettings {
        hidden: vec![8],
        epochs: 5,
        warm_up_epochs: 2,
        batch_size: 16,
        learning_rate: 1e-2,
        seed,
        streams: NetStreams::default(),
    }
}

fn accuracies(o: &TrainOutcome) -> Vec<f64> {
    o.history.iter().map(|m| m.test_accuracy).collect()
}

fn same_trajectory(a: &TrainOutcome, ai: usize, b: &TrainOutcome, bi: usize) -> bool {
    a.nets[ai] == b.nets[bi]
}

/// Each collapse, checked as exact equality of final parameters (and of the
/// test-accuracy trajectory where both runs report on the same network).
pub fn collapse_suite(seed: u64) -> Vec<(&'static str, Result<(), String>)> {
    let (train, test) = small_problem(seed, 0.3);
    let settings = small_settings(seed);
    let base = BaselineConfig {
        train: settings.clone(),
        noise_ratio: Some(0.3),
        ..BaselineConfig::default()
    };
    let standard = train_standard(&train, &test, &base).unwrap();
    let check = |ok: bool, what: &str| if ok { Ok(()) } else { Err(format!("{what} diverged from standard")) };
    let mut out = Vec::new();

    // Per-batch gradient scaling with every sample in the high set.
    let per_batch = {
        let case = grad_case(seed);
        let probs = case.net.predict_proba(&case.x).unwrap();
        let partner = partition_by_entropy(&case.partner_probs, &case.onehot, -1.0).unwrap();
        let own = partition_by_entropy(&probs, &case.onehot, -1.0).unwrap();
        let beta = 0.5;
        let (_, g) = clc_batch_loss(&probs, &partner, &own, &case.onehot, 0.1, beta).unwrap();
        let (_, s) = subset_ce(&probs, &case.onehot, None);
        let worst = g
            .values()
            .iter()
            .zip(s.values())
            .map(|(a, b)| (a - beta * b).abs())
            .fold(0.0, f64::max);
        if worst <= 1e-12 {
            Ok(())
        } else {
            Err(format!("gradient differs from beta x standard by {worst:e}"))
        }
    };
    out.push(("clc gamma<0 batch gradient = beta x standard", per_batch));

    let clc_cfg = ClcConfig {
        train: settings.clone(),
        beta: 1.0,
        gamma: GammaPolicy::Fixed(-1.0),
        ..ClcConfig::default()
    };
    let clc = train_clc(&train, &test, &clc_cfg).unwrap();
    out.push((
        "clc gamma<0, beta=1 trajectory = standard",
        check(same_trajectory(&clc, 0, &standard, 0) && accuracies(&clc) == accuracies(&standard), "clc"),
    ));

    let boot = train_bootstrap(&train, &test, &BaselineConfig { bootstrap_kappa: 1.0, ..base.clone() }).unwrap();
    out.push((
        "bootstrap kappa=1 = standard",
        check(same_trajectory(&boot, 0, &standard, 0) && boot.history == standard.history, "bootstrap"),
    ));

    let fwd = train_forward(&train, &test, &base, &TransitionMatrix::identity(3)).unwrap();
    out.push((
        "forward T=I = standard",
        check(same_trajectory(&fwd, 0, &standard, 0) && fwd.history == standard.history, "forward"),
    ));

    let codist = train_codistillation(&train, &test, &BaselineConfig { codistill_lambda: 0.0, ..base.clone() }).unwrap();
    let swapped = BaselineConfig {
        train: TrainSettings {
            streams: settings.streams.swapped(),
            ..settings.clone()
        },
        ..base.clone()
    };
    let standard_g = train_standard(&train, &test, &swapped).unwrap();
    out.push((
        "co-distillation lambda=0 = two standards",
        check(
            same_trajectory(&codist, 0, &standard, 0)
                && same_trajectory(&codist, 1, &standard_g, 0)
                && accuracies(&codist) == accuracies(&standard),
            "co-distillation",
        ),
    ));

    let zero = BaselineConfig {
        noise_ratio: Some(0.0),
        ..base.clone()
    };
    let sp = train_self_paced(&train, &test, &zero).unwrap();
    out.push((
        "self-paced r=0 = standard",
        check(same_trajectory(&sp, 0, &standard, 0) && sp.history == standard.history, "self-paced"),
    ));

    let cot = train_coteaching(&train, &test, &zero).unwrap();
    out.push((
        "co-teaching r=0 = two standards",
        check(
            same_trajectory(&cot, 0, &standard, 0) && same_trajectory(&cot, 1, &standard_g, 0),
            "co-teaching",
        ),
    ));

    let slc = train_slc(&train, &test, &clc_cfg).unwrap();
    out.push((
        "slc gamma<0, beta=1 trajectory = standard",
        check(same_trajectory(&slc, 0, &standard, 0) && accuracies(&slc) == accuracies(&standard), "slc"),
    ));
    out
}

// ---------------------------------------------------------------------------
// Determinism

pub const BLOBS_CONFIG: &str = r#"
method = "clc"

[dataset]
kind = "blobs"
classes = 4
n_per_class = 60
dim = 3
separation = 3.0

[noise]
kind = "pairwise"
ratio = 0.3

[model]
hidden = [16]

[train]
epochs = 8
warm_up_epochs = 3
batch_size = 32
learning_rate = 0.01
last_k = 3
seed = 11
"#;

/// Run `config` twice into fresh directories and compare metrics.csv bytes.
pub fn determinism_check(config: &str, scratch: &Path) -> Result<String, String> {
    let cfg = ExperimentConfig::from_toml_str(config).map_err(|e| e.to_string())?;
    let mut bytes = Vec::new();
    for attempt in ["a", "b"] {
        let dir = scratch.join(attempt);
        run_config(&cfg, scratch, &dir).map_err(|e| e.to_string())?;
        bytes.push(std::fs::read(dir.join("metrics.csv")).map_err(|e| e.to_string())?);
    }
    if bytes[0] == bytes[1] {
        Ok(format!("{} identical bytes", bytes[0].len()))
    } else {
        Err("metrics.csv differs between identical runs".into())
    }
}
