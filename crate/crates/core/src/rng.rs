//! Seed plumbing. Every stochastic routine takes a caller-owned RNG or a seed;
//! derived streams are built from `(seed, index)` so parallel replicates do not
//! depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type AugRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> AugRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Per-item stream: the item index is xor-ed into the base seed.
pub fn derived_rng(seed: u64, index: u64) -> AugRng {
    ChaCha8Rng::seed_from_u64(seed ^ index)
}

/// Independent named stream (used where two RNG consumers must not interfere,
/// e.g. minibatch selection vs. augmentation draws).
pub fn stream_rng(seed: u64, stream: u64) -> AugRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
