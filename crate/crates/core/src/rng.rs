//! Seeded random source shared by initialization, shuffling and the
//! verification suites.
//!
//! Draws come from ChaCha8 keyed by the 64-bit seed, so a given seed yields
//! the same sequence on every platform.

use rand::seq::SliceRandom;
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    /// An independent sequence for the same seed, e.g. one stream for
    /// parameter initialization and another for epoch shuffling.
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { seed, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    /// Uniform on `[lo, hi)`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Zero-mean draw with standard deviation `std`: uniform on
    /// `(-std·√3, std·√3)`.
    pub fn centered(&mut self, std: f64) -> f64 {
        let half_width = std * 3f64.sqrt();
        self.uniform_in(-half_width, half_width)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.inner);
    }
}
