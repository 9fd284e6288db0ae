//! Seeded random streams.
//!
//! Every random draw in the toolkit comes from ChaCha8 (`rand_chacha`), a
//! portable generator whose output is identical on every platform. Independent
//! consumers of the same seed take distinct ChaCha stream ids, so adding draws
//! in one place never shifts the numbers seen elsewhere.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng as SpotRng;

/// Stream ids for the engine's random consumers.
pub mod purpose {
    pub const INIT_DESIGN: u64 = 1;
    pub const MODEL_FIT: u64 = 2;
    pub const CANDIDATES: u64 = 3;
    pub const TREE_CANDIDATE: u64 = 4;
    pub const RESTART: u64 = 5;
    pub const FALLBACK: u64 = 6;
    pub const REPORT: u64 = 7;
    pub const ALGORITHM: u64 = 8;
}

/// Generator for `seed` on the given stream.
pub fn stream(seed: u64, stream: u64) -> SpotRng {
    let mut rng = SpotRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream keyed by a sequential step and a purpose, so every step of a tuning
/// run draws from fresh numbers.
pub fn step_stream(seed: u64, step: u32, purpose: u64) -> SpotRng {
    stream(seed, (u64::from(step) << 8) | purpose)
}
