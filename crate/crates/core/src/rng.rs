//! Seeded randomness. Every random draw in the crate goes through these helpers so
//! that a `(seed, stream)` pair fully determines the output on every platform.

use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

pub type Rng = ChaCha8Rng;

/// Seed streams used by the pipeline. Keeping them in one place avoids accidental
/// reuse of a stream for two unrelated purposes.
pub mod stream {
    pub const SPLIT_UNSEEN: u64 = 1;
    pub const SPLIT_PROBE: u64 = 2;
    pub const SVD: u64 = 3;
    pub const INIT_W1: u64 = 4;
    pub const INIT_W2: u64 = 5;
    pub const KMEANS: u64 = 6;
    pub const SILHOUETTE: u64 = 7;
    pub const SVM: u64 = 8;
    pub const DOMAIN: u64 = 9;
    /// Shared by the first model and every retraining after expansion.
    pub const MODEL: u64 = 10;
}

/// SplitMix64 finalizer; mixes a seed with a stream id.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// Uniform draw in `[0, 1)` with 53 bits of precision.
pub fn uniform(rng: &mut Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform integer in `[0, bound)`, rejection sampled so it is unbiased.
pub fn below(rng: &mut Rng, bound: usize) -> usize {
    assert!(bound > 0, "below() needs a positive bound");
    let bound = bound as u64;
    let zone = u64::MAX - (u64::MAX % bound);
    loop {
        let x = rng.next_u64();
        if x < zone {
            return (x % bound) as usize;
        }
    }
}

/// Standard normal draw (Box-Muller).
pub fn gaussian(rng: &mut Rng) -> f64 {
    loop {
        let u1 = uniform(rng);
        if u1 > 0.0 {
            let u2 = uniform(rng);
            return libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(core::f64::consts::TAU * u2);
        }
    }
}

/// In-place Fisher-Yates shuffle.
pub fn shuffle<T>(rng: &mut Rng, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = below(rng, i + 1);
        items.swap(i, j);
    }
}

/// `amount` distinct indices from `0..n`, in draw order.
pub fn sample_without_replacement(rng: &mut Rng, n: usize, amount: usize) -> Vec<usize> {
    assert!(amount <= n);
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..amount {
        let j = i + below(rng, n - i);
        pool.swap(i, j);
    }
    pool.truncate(amount);
    pool
}
