//! Seed derivation and per-row random substreams.
//!
//! Replicates and pipeline stages get independent seeds by mixing
//! `(master_seed, replicate, stage)` through a splitmix64 chain; data
//! generators then give every row its own ChaCha stream so a row's draws
//! do not depend on how many draws earlier rows consumed.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
pub fn split_mix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN_GAMMA);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mix a list of words into a single seed. Each word is absorbed into the
/// splitmix state, so any change to any word reshuffles the output.
pub fn derive_seed(words: &[u64]) -> u64 {
    let mut state: u64 = 0x6A09_E667_F3BC_C908;
    let mut out = split_mix64(&mut state);
    for &w in words {
        state ^= w;
        out = split_mix64(&mut state);
    }
    out
}

/// RNG for one logical row: `seed` selects the generator, `row` the stream.
pub fn row_rng(seed: u64, row: u64) -> ChaCha12Rng {
    let mut r = ChaCha12Rng::seed_from_u64(seed);
    r.set_stream(row);
    r
}
