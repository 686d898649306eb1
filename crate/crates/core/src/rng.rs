//! Seeded random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream keyed by a
//! user seed plus a purpose-specific stream id, so parallel and serial
//! evaluation consume identical numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream ids separating independent consumers of one user seed.
pub mod stream {
    pub const ABUNDANCE_SEED: u64 = 1;
    pub const SLIC: u64 = 2;
    pub const ENDMEMBER_PICK: u64 = 3;
    pub const NOISE: u64 = 4;
    pub const DATASET_SPLIT: u64 = 5;
    pub const GENERATOR_INIT: u64 = 6;
    pub const DISCRIMINATOR_INIT: u64 = 7;
    pub const SHUFFLE: u64 = 8;
    pub const LIBRARY: u64 = 9;
    /// Split draws use `SPLIT_BASE + map_index`, with the block id as word offset key.
    pub const SPLIT_BASE: u64 = 1 << 32;
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Counter-based stream for a `(seed, map, block)` triple.
pub fn keyed_rng(seed: u64, map: u64, block: u64) -> ChaCha8Rng {
    let mut rng = stream_rng(seed, stream::SPLIT_BASE + map);
    // 16 words per block leaves room for the two uniforms each block draws.
    rng.set_word_pos(u128::from(block) * 16);
    rng
}
