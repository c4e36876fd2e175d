//! Counter-based random streams.
//!
//! Every stochastic quantity draws from its own ChaCha8 stream whose key is
//! derived from `(seed, point, repetition)`, so results never depend on the
//! order in which points are evaluated or on the thread that evaluates them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream index reserved for the event timeline.
pub const TIMELINE_STREAM: u64 = u64::MAX;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn point_stream(seed: u64, point: u64, repetition: u64) -> ChaCha8Rng {
    let mut state = seed;
    let mut key = [0u8; 32];
    let words = [
        splitmix64(&mut state),
        splitmix64(&mut state) ^ point,
        splitmix64(&mut state) ^ repetition.rotate_left(17),
        splitmix64(&mut state),
    ];
    for (chunk, w) in key.chunks_exact_mut(8).zip(words) {
        chunk.copy_from_slice(&w.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    // decorrelate neighbouring (point, repetition) keys
    rng.set_stream(point ^ repetition.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng
}
