//! Seeded, counter-based random streams.
//!
//! Every trial, probe or sample chunk draws from its own ChaCha8 stream
//! `(seed, stream_id)`, so results do not depend on how work is scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn stream(seed: u64, stream_id: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

/// Uniform values in `[lo, hi)`.
pub fn uniform_vec(rng: &mut StreamRng, len: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(lo..hi)).collect()
}
