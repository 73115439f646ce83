//! Explicit, seedable random sources.
//!
//! Every stochastic operation takes a [`RandomSource`] argument; there is no
//! global generator. Per-trial sources are keyed by `(master seed, trial
//! index)` through ChaCha's stream counter, so trial `i` draws the same
//! numbers no matter which worker runs it or in what order.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct RandomSource {
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Independent stream for one trial of a run keyed by `master`.
    pub fn for_trial(master: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master);
        rng.set_stream(index);
        Self { rng }
    }

    /// Draws a fresh child source; the parent advances.
    pub fn split(&mut self) -> Self {
        Self::from_seed(self.rng.next_u64())
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
}

/// SplitMix64 finalizer, used to derive sub-seeds such as one per sweep
/// point.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
