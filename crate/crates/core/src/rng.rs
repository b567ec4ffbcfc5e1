//! Deterministic random streams.
//!
//! Every random quantity in the crate is drawn from a ChaCha8 stream keyed by the
//! user seed and selected by a path of indices (repetition, step, block, …). Streams
//! with different paths are independent by construction, so results never depend on
//! how work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Path tags, kept distinct so nested derivations never collide by accident.
pub mod tag {
    pub const SAMPLE_BLOCK: u64 = 0x5a4d_504c;
    pub const EXPERIMENT: u64 = 0x4558_5052;
    pub const STEP_UNCONDITIONAL: u64 = 1;
    pub const STEP_CONDITIONAL: u64 = 2;
    pub const RETRY: u64 = 0x5245_5452;
    pub const CALIBRATION: u64 = 0x4341_4c49;
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashes a seed and a path into a single 64-bit key.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix(seed), |acc, &p| splitmix(acc ^ splitmix(p.wrapping_add(0x632b_e59b_d9b4_e019))))
}

/// The stream for `path` under `seed`.
pub fn stream(seed: u64, path: &[u64]) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(derive_seed(seed, path));
    rng
}
