//! Deterministic random streams.
//!
//! Every random decision in a run draws from a stream keyed by
//! `(seed, node, round, purpose)`, so the order in which node steps are
//! evaluated never changes the outcome.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream purposes. Distinct purposes never share a stream.
pub mod purpose {
    pub const STEP: u64 = 1;
    pub const SEND_DROP: u64 = 2;
    pub const RECV_DROP: u64 = 3;
    pub const TOPOLOGY: u64 = 4;
    pub const SPANNER_DRAW: u64 = 5;
    pub const DIRECT_WALK: u64 = 6;
    pub const EXPERIMENT: u64 = 7;
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a list of words into one 64-bit key.
pub fn mix(words: &[u64]) -> u64 {
    words
        .iter()
        .fold(0x5851_f42d_4c95_7f2d, |acc, &w| splitmix64(acc ^ splitmix64(w)))
}

pub fn stream(seed: u64, node: u64, round: u64, purpose: u64) -> StreamRng {
    StreamRng::seed_from_u64(mix(&[seed, node, round, purpose]))
}

/// Derives a child seed, e.g. one per evolution or pipeline stage.
pub fn derive(seed: u64, label: u64) -> u64 {
    mix(&[seed, label, 0xa5a5])
}
