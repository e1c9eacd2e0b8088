//! Deterministic seed derivation.
//!
//! Every random stream is keyed by `(master, purpose tag, index)` and mixed
//! with SplitMix64 finalizers:
//!
//! ```text
//! seed = mix(mix(master ⊕ mix(tag)) ⊕ index)
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Brownian increments of one path, indexed by time step.
pub const TAG_INCREMENTS: u64 = 0x494e_4352;
/// Per-path master seeds inside an ensemble, indexed by path.
pub const TAG_PATH: u64 = 0x5041_5448;

/// SplitMix64 finalizer.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive(master: u64, tag: u64, index: u64) -> u64 {
    mix(mix(master ^ mix(tag)) ^ index)
}

pub fn stream(master: u64, tag: u64, index: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(derive(master, tag, index))
}
