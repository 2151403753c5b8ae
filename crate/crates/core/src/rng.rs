//! Keyed random streams.
//!
//! Every random draw in the toolkit comes from a ChaCha8 stream whose key is
//! derived from `(seed, purpose, indices…)`, so packets, subcarriers and
//! Monte-Carlo trials can be generated in any order or in parallel and still
//! reproduce bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::C64;

pub use rand_chacha::ChaCha8Rng as StreamRng;

/// Purpose tags mixed into stream keys.
pub mod purpose {
    pub const SCENE: u64 = 0x5343_454e;
    pub const PILOT_NOISE: u64 = 0x5049_4c54;
    pub const DATA_BITS: u64 = 0x4249_5453;
    pub const DATA_NOISE: u64 = 0x444e_4f53;
    pub const INIT: u64 = 0x494e_4954;
    pub const SHUFFLE: u64 = 0x5348_5546;
    pub const SPLIT: u64 = 0x5350_4c54;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent stream for `(seed, key[0], key[1], …)`.
pub fn stream(seed: u64, key: &[u64]) -> ChaCha8Rng {
    let mut state = splitmix64(seed);
    for &k in key {
        state = splitmix64(state ^ splitmix64(k.wrapping_add(0x632b_e59b_d9b4_e019)));
    }
    let mut bytes = [0u8; 32];
    for chunk in bytes.chunks_exact_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha8Rng::from_seed(bytes)
}

/// Circularly-symmetric complex Gaussian sample with total variance `variance`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let sigma = libm::sqrt(variance / 2.0);
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(sigma * re, sigma * im)
}

/// Uniform sample on `[lo, hi)`.
pub fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}
