//! Deterministic seed derivation.
//!
//! Every random quantity is drawn from a ChaCha stream whose seed is a
//! pure function of (master seed, sweep kind, sweep-point key, trial
//! index). Sweep points can therefore run in any order, and architecture
//! comparisons at a point consume identical draws.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// SplitMix64 finalizer; good avalanche for cheap key mixing.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fold a list of 64-bit parts into one seed.
pub fn mix(parts: &[u64]) -> u64 {
    let mut h = 0x243F_6A88_85A3_08D3u64;
    for &p in parts {
        h = splitmix64(h ^ splitmix64(p));
    }
    h
}

/// Key for a string tag (FNV-1a).
pub fn key_str(s: &str) -> u64 {
    let mut h = 0xCBF2_9CE4_8422_2325u64;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Key for a real-valued sweep coordinate. Uses the bit pattern, so two
/// points are paired exactly when their coordinates are bitwise equal.
pub fn key_f64(x: f64) -> u64 {
    x.to_bits()
}

/// RNG for one trial of one sweep point.
pub fn trial_rng(point_seed: u64, trial: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(mix(&[point_seed, trial]))
}
