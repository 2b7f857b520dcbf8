//! Per-episode random streams.
//!
//! Every episode owns three independent streams (policy, user, estimator),
//! all keyed by the master seed and separated by the ChaCha stream counter.
//! Streams never depend on thread scheduling, so replicated runs can execute
//! in parallel and still replay bit-exactly.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamTag {
    Policy = 1,
    User = 2,
    Estimator = 3,
}

const TAG_BITS: u32 = 2;

/// Stream `tag` of episode `run_index` under `master_seed`.
pub fn episode_stream(master_seed: u64, run_index: u64, tag: StreamTag) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream((run_index << TAG_BITS) | tag as u64);
    rng
}
