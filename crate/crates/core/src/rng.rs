//! Seeded random streams.
//!
//! Every consumer draws from ChaCha8 keyed by the user seed, with the stream
//! number set to the index of the item being processed. Items can therefore be
//! handled in any order, or in parallel, without changing their bytes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream `index` of the generator keyed by `seed`.
pub fn stream(seed: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Domain-separated stream, so two subsystems sharing a seed do not collide.
pub fn tagged_stream(seed: u64, tag: u64, index: u64) -> StreamRng {
    stream(seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15), index)
}
