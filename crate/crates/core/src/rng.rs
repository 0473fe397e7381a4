//! Counter-based random streams.
//!
//! A [`StreamKey`] packs up to four 64-bit coordinates (master seed,
//! experiment tag, trial, sub-stream) directly into a ChaCha8 seed, and the
//! item index selects the ChaCha stream. Distinct `(key, index)` pairs
//! therefore address disjoint keystreams without any hashing, and every item
//! can be regenerated independently of thread count or evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    words: [u64; 4],
}

impl StreamKey {
    pub fn new(seed: u64) -> Self {
        Self {
            words: [seed, 0, 0, 0],
        }
    }

    pub fn seed(&self) -> u64 {
        self.words[0]
    }

    /// Experiment or purpose tag.
    pub fn with_tag(mut self, tag: u64) -> Self {
        self.words[1] = tag;
        self
    }

    pub fn with_trial(mut self, trial: u64) -> Self {
        self.words[2] = trial;
        self
    }

    /// Free coordinate for nested purposes inside one trial (noise, dataset j, ...).
    pub fn with_sub(mut self, sub: u64) -> Self {
        self.words[3] = sub;
        self
    }

    pub fn words(&self) -> [u64; 4] {
        self.words
    }

    /// Generator for item `index` under this key.
    pub fn rng(&self, index: u64) -> ChaCha8Rng {
        let mut seed = [0u8; 32];
        for (chunk, w) in seed.chunks_exact_mut(8).zip(self.words) {
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(index);
        rng
    }

    /// `dim` standard-normal draws for item `index`.
    pub fn normal_vector(&self, index: u64, dim: usize) -> Vec<f64> {
        let mut rng = self.rng(index);
        (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect()
    }
}

/// Stable tags for the experiment families.
pub mod tags {
    pub const NOISE: u64 = 0x6e6f_6973_65;
    pub const SAMPLE_EFFICIENCY: u64 = 1;
    pub const CORRELATION: u64 = 2;
    pub const BIAS_VARIANCE: u64 = 3;
    pub const MTOG: u64 = 4;
}
