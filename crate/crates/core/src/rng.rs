//! Counter-based random streams: every `(seed, stream)` pair is an
//! independent, reproducible generator regardless of evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream id for frame `frame` of phase `phase`.
pub fn frame_stream(phase: usize, frame: usize) -> u64 {
    ((phase as u64) << 32) | frame as u64
}

/// Streams reserved for vacuum reference frames.
pub fn vacuum_stream(frame: usize) -> u64 {
    (1u64 << 63) | frame as u64
}
