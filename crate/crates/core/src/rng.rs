//! Seeded, stream-separated randomness.
//!
//! Every consumer of randomness (noise injection, weight init, batch
//! shuffling, data generation) draws from its own [`SeededRng`], derived from
//! one master seed plus a stream label. ChaCha8 is used because its output is
//! specified bit-for-bit independent of platform.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Well-known stream labels. Any `u64` works; these keep the harness consistent.
pub mod streams {
    pub const NOISE: u64 = 1;
    pub const SPLIT: u64 = 2;
    pub const DATA: u64 = 3;
    pub const INIT_F: u64 = 10;
    pub const INIT_G: u64 = 11;
    pub const SHUFFLE_F: u64 = 20;
    pub const SHUFFLE_G: u64 = 21;
}

#[derive(Debug, Clone)]
pub struct SeededRng {
    inner: ChaCha8Rng,
    seed: u64,
    stream_id: u64,
}

impl SeededRng {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self {
            inner,
            seed,
            stream_id,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.random::<u64>()
    }

    /// Uniform integer in `[0, n)`.
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.inner);
    }

    /// Fresh permutation of `0..n`.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut order: Vec<usize> = (0..n).collect();
        self.shuffle(&mut order);
        order
    }

    /// Draw an index from a discrete distribution given by `weights`
    /// (non-negative, summing to roughly one).
    pub fn categorical(&mut self, weights: &[f64]) -> usize {
        let u = self.uniform();
        let mut acc = 0.0;
        let mut last_positive = 0;
        for (i, &w) in weights.iter().enumerate() {
            if w > 0.0 {
                last_positive = i;
            }
            acc += w;
            if u < acc {
                return i;
            }
        }
        // Rounding left the cumulative sum a hair below one.
        last_positive
    }
}
