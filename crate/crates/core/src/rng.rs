//! Deterministic per-trial random streams.
//!
//! Every random draw in a sweep comes from a stream keyed by
//! `(seed, trial index, stream id)`, so results do not depend on worker count
//! or on which other schemes run in the same sweep.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream ids shared by every scheme in a trial.
pub mod stream {
    pub const DATA: u64 = 1;
    pub const CHANNEL: u64 = 2;
    pub const NOISE: u64 = 3;
    pub const PILOTS: u64 = 4;
    /// Scheme-private streams start here, offset by the scheme id.
    pub const SCHEME_BASE: u64 = 0x100;
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `seed ⊕ hash(trial, stream)`.
pub fn stream_seed(seed: u64, trial: u64, stream: u64) -> u64 {
    seed ^ splitmix(splitmix(trial) ^ stream.rotate_left(32))
}

pub fn stream_rng(seed: u64, trial: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(seed, trial, stream))
}
