//! Deterministic random sampling.
//!
//! Every stochastic operation in the crate derives an independent ChaCha8
//! stream from a user seed and a stream index (observation counter or
//! replicate index) via SplitMix64, then draws standard normals by the
//! Box-Muller transform. Changing any of these choices changes generated
//! bytes and therefore requires a major version bump; regression fixtures
//! depend on them bit for bit.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN_GAMMA);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Expands (seed, stream) into a 32-byte ChaCha key: the stream index is
/// folded in with one SplitMix64 step, then four further outputs fill the
/// key in little-endian order.
fn chacha_seed(seed: u64, stream: u64) -> [u8; 32] {
    let mut state = stream;
    let mut state = seed ^ splitmix64(&mut state);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    key
}

/// A stream of standard normal deviates, independent per (seed, stream) pair.
pub(crate) struct NormalSource {
    rng: ChaCha8Rng,
}

impl NormalSource {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { rng: ChaCha8Rng::from_seed(chacha_seed(seed, stream)) }
    }

    /// Uniform in the open interval (0, 1): the top 53 bits of a u64 plus a
    /// half-ulp offset, so the value is never 0 (safe under ln).
    fn uniform_open(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }

    /// One standard normal via Box-Muller; the sine twin is discarded so a
    /// draw consumes exactly two u64 words.
    pub fn next_normal(&mut self) -> f64 {
        let u1 = self.uniform_open();
        let u2 = self.uniform_open();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}
