//! Collaborative label correction (CLC) for learning with noisy labels.
//!
//! Two networks `f` and `g` are trained side by side. On every mini-batch each
//! network's predictions are split by Shannon entropy against a threshold Γ:
//! confident (low-entropy) predictions become soft pseudo-labels for the
//! *other* network, while the uncertain remainder keeps its original noisy
//! label. The crate also ships:
//!
//! - the single-network ablation (SLC),
//! - seven comparison methods (Standard, Bootstrap, Forward, Decouple,
//!   self-paced small-loss, Co-teaching, Co-distillation),
//! - symmetric / pairwise / asymmetric label-noise models,
//! - synthetic datasets and an IDX (MNIST-format) loader,
//! - a TOML-driven experiment harness writing `metrics.csv`,
//!   `summary.json` and `transition.json`.
//!
//! Everything is deterministic under a seed. See the crate's `examples/`
//! directory for one runnable program per capability.

pub mod data;
pub mod error;
pub mod harness;
pub mod loss;
pub mod math;
pub mod metrics;
pub mod net;
pub mod noise;
pub mod rng;
pub mod select;
pub mod train;

pub use data::{LabeledDataset, TrainingView};
pub use error::{Error, Result};
pub use math::Matrix;
pub use net::{AdamState, MlpNetwork};
pub use noise::{NoiseKind, NoiseSpec, TransitionMatrix};
pub use rng::SeededRng;
pub use select::{BatchPartition, GammaPolicy};
