//! Deterministic seed splitting.
//!
//! `derive_seed(master, index)` offsets the master seed by a Weyl step per
//! stream and runs the SplitMix64 finalizer over the result. Both steps are
//! bijections on `u64`, so for a fixed master the map is injective in the
//! stream index. The constants are fixed forever; changing them changes
//! every recorded output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const WEYL: u64 = 0x9E37_79B9_7F4A_7C15;
const STREAM_SALT: u64 = 0xD1B5_4A32_D192_ED03;

/// SplitMix64 output function.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, stream_index: u64) -> u64 {
    let base = master ^ STREAM_SALT;
    mix64(base.wrapping_add(WEYL.wrapping_mul(stream_index.wrapping_add(1))))
}

/// The generator used throughout the crate.
pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stream_rng(master: u64, stream_index: u64) -> SimRng {
    rng_from_seed(derive_seed(master, stream_index))
}
