//! Seeding conventions.
//!
//! Every stochastic routine takes an explicit generator. Batch routines
//! derive one independent ChaCha stream per replica from a master seed, so a
//! replica's output depends only on `(seed, replica index)` and never on the
//! order in which workers pick replicas up.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Generator for a single, non-replicated computation.
pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for replica `index` of a batch keyed by `seed`.
pub fn replica_rng(seed: u64, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Mixes a master seed with a list of coordinates (grid cell, replica, ...)
/// into a new seed. SplitMix64 finaliser applied per coordinate.
pub fn derive_seed(master: u64, coords: &[u64]) -> u64 {
    let mut state = master ^ 0x9e37_79b9_7f4a_7c15;
    for &c in coords {
        state = splitmix(state ^ splitmix(c.wrapping_add(0x632b_e59b_d9b4_e019)));
    }
    state
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
