//! Seed plumbing. Every random draw in the crate comes from a ChaCha stream
//! derived from one master seed, so runs are reproducible bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type GameRng = ChaCha8Rng;

/// Stream ids used by trainers and evaluators.
pub mod stream {
    pub const ENV: u64 = 0;
    pub const ACTOR_P1: u64 = 1;
    pub const ACTOR_P2: u64 = 2;
    pub const LEARNER_P1: u64 = 3;
    pub const LEARNER_P2: u64 = 4;
    pub const INIT_P1: u64 = 5;
    pub const INIT_P2: u64 = 6;
}

/// Independent generator for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> GameRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finalizer; derives per-episode or per-stage seeds.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
