//! Seeded randomness.
//!
//! Every seeded component draws from ChaCha8 (`rand_chacha` 0.3). A stream is
//! keyed by `(seed, stream)`: the generator is seeded with
//! `SeedableRng::seed_from_u64(seed)` and then switched to ChaCha stream
//! `stream` (the word-position counter starts at zero). Integer ranges use
//! `rand` 0.8's `gen_range` and shuffles use `SliceRandom::shuffle`; both are
//! value-stable within those major versions, which the workspace pins.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream ids used by the crate. Generation retries fold the attempt number
/// into the stream so each re-roll is an independent, reproducible draw.
pub mod stream {
    pub const GENERATE: u64 = 0x100;
    pub const INSTANTIATE: u64 = 0x200;
    pub const RANDOM_POLICY: u64 = 0x300;
    pub const SCENARIO: u64 = 0x400;
    pub const FUZZ: u64 = 0x500;
}

pub fn seeded(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn pick<'a, T>(rng: &mut SimRng, items: &'a [T]) -> &'a T {
    &items[rng.gen_range(0..items.len())]
}

pub fn shuffled<T: Clone>(rng: &mut SimRng, items: &[T]) -> Vec<T> {
    let mut out = items.to_vec();
    out.shuffle(rng);
    out
}
