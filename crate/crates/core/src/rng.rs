//! Seeded generators and the stream-splitting rule.
//!
//! Every random quantity in the crate is drawn from a [`ChaCha8Rng`]. Child
//! streams are derived from a parent seed and an integer index with
//! [`derive_seed`], a SplitMix64-style finalizer applied to the pair, so
//! that independent jobs (observations, grid values, trials) can be run in
//! any order or in parallel and still produce identical bytes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SbaRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of child stream `index` from `parent`.
pub fn derive_seed(parent: u64, index: u64) -> u64 {
    mix64(mix64(parent.wrapping_add(GOLDEN)) ^ index.wrapping_mul(GOLDEN).wrapping_add(1))
}

/// Folds a sequence of indices into `parent`, one [`derive_seed`] step each.
pub fn derive_seed_path(parent: u64, path: &[u64]) -> u64 {
    path.iter().fold(parent, |acc, &i| derive_seed(acc, i))
}

pub fn seeded(seed: u64) -> SbaRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn substream(parent: u64, index: u64) -> SbaRng {
    seeded(derive_seed(parent, index))
}
