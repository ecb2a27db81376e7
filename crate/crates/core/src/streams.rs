//! Counter-based random streams.
//!
//! Every walk owns the ChaCha8 stream `(key = seed, stream = walk index)`, so
//! the numbers a walk sees do not depend on which worker runs it or in what
//! order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type WalkRng = ChaCha8Rng;

pub fn walk_stream(seed: u64, walk_index: u64) -> WalkRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(walk_index);
    rng
}

/// SplitMix64 finalizer, used to derive independent seeds for sub-experiments.
pub fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed for the sub-experiment identified by `tags` under `seed`.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(mix64(seed), |acc, &t| mix64(acc ^ mix64(t)))
}
