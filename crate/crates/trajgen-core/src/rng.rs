//! Seed-splitting rules.
//!
//! All stochastic code derives its randomness from a `(seed, stream)` pair
//! mapped onto ChaCha8 streams. The rule is:
//!
//! * training step `k` draws from `stream_rng(seed, STREAM_TRAIN_STEP + k)`,
//! * generated sample `i` draws from `stream_rng(seed, STREAM_SAMPLE + i)`,
//! * parameter init draws from `stream_rng(seed, STREAM_INIT)`.
//!
//! Streams are independent counters, so results do not depend on batch
//! shapes, thread counts, or how much of the run already happened — which is
//! what makes checkpoint resume bit-exact.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const STREAM_INIT: u64 = 1;
pub const STREAM_SAMPLE: u64 = 1 << 32;
pub const STREAM_TRAIN_STEP: u64 = 1 << 33;

/// ChaCha8 stream `stream` of the generator seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
