//! Seeded random streams.
//!
//! Every sampler takes an owned stream built here so that a `(seed, stream)`
//! pair fully determines the draws within one build.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn stream(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent sub-stream `index` of `seed`, used to split Monte Carlo budgets
/// into chunks whose results do not depend on scheduling.
pub fn substream(seed: u64, index: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index + 1);
    rng
}

/// A fresh seed derived from `(seed, index)`, for APIs that take seeds.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    use rand::RngCore;
    substream(seed, index).next_u64()
}
