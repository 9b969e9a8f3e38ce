use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// A reproducible random stream: ChaCha8 keyed by `seed`, on stream `stream`.
///
/// Every `(seed, stream)` pair yields an independent, fixed sequence, so a
/// replica's output does not depend on which thread runs it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSpec {
    pub seed: u64,
    pub stream: u64,
}

impl RngSpec {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn for_replica(seed: u64, replica: usize) -> Self {
        Self { seed, stream: replica as u64 }
    }

    /// A different family of streams under the same seed.
    pub fn offset(self, by: u64) -> Self {
        Self { seed: self.seed, stream: self.stream.wrapping_add(by) }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Exponential variate with the given rate.
pub(crate) fn exponential<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    let u: f64 = rng.random();
    -(1.0 - u).ln() / rate
}
