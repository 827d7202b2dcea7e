//! Deterministic seed derivation for replicated Monte Carlo work.
//!
//! Every replication draws from its own ChaCha stream whose seed depends only
//! on the base seed and the replication index, so results do not depend on
//! scheduling or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type McRng = ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for replication `index` of the family rooted at `base`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    base ^ mix64(index ^ mix64(base))
}

/// Seed for a named sub-stream, e.g. a calibration run or a noise-floor resample.
pub fn derive_named(base: u64, tag: &str) -> u64 {
    let h = tag
        .bytes()
        .fold(0xCBF2_9CE4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01B3));
    derive_seed(base, mix64(h))
}

pub fn rng_from_seed(seed: u64) -> McRng {
    ChaCha8Rng::seed_from_u64(seed)
}
