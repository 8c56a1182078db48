//! Deterministic randomness.
//!
//! Every randomized component takes an explicit 64-bit seed; there is no
//! ambient entropy anywhere in the crate. The generator is ChaCha8, and the
//! few derived draws (coin flips, bounded integers) are fixed here so that
//! byte streams are reproducible across platforms and releases. Traces
//! record [`RNG_ALGORITHM`] so output files identify the generator that
//! produced them.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Identifier written into traces produced with randomized strategies.
pub const RNG_ALGORITHM: &str = "chacha8/v1";

/// A seeded generator for one run. Streams allow several independent
/// generators from a single user-visible seed.
pub struct RunRng {
    inner: ChaCha8Rng,
}

impl RunRng {
    pub fn from_seed(seed: u64) -> Self {
        RunRng {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn from_seed_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        RunRng { inner }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Fair coin from the low bit of one draw.
    pub fn coin(&mut self) -> bool {
        self.inner.next_u64() & 1 == 1
    }

    /// Uniform value in `0..bound` by the multiply-shift reduction. The bias
    /// is below `bound / 2^64`, far beneath anything observable here.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "empty range");
        ((self.inner.next_u64() as u128 * bound as u128) >> 64) as u64
    }

    /// Uniform draw against a threshold fraction in `[0, 1]`, consuming
    /// exactly one generator step regardless of the fraction.
    pub fn chance(&mut self, fraction: f64) -> bool {
        const SCALE: f64 = (1u64 << 53) as f64;
        let threshold = (fraction.clamp(0.0, 1.0) * SCALE) as u64;
        (self.inner.next_u64() >> 11) < threshold
    }
}

/// Mixes a base seed and a salt into a derived seed (splitmix64 finalizer).
pub fn derive_seed(base: u64, salt: u64) -> u64 {
    splitmix64(base ^ splitmix64(salt))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
