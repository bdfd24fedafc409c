//! Seed derivation for independent deterministic randomness streams.
//!
//! Every source of randomness in a run is a `ChaCha8Rng` keyed by the run
//! seed plus a purpose label and indices, so parallel instances never share a
//! stream and replays are exact regardless of worker scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Mix a root seed with a purpose label and indices into a derived seed.
pub fn derive_seed(root: u64, label: &str, indices: &[u64]) -> u64 {
    let mut h = splitmix64(root ^ 0xA076_1D64_78BD_642F);
    for b in label.as_bytes() {
        h = splitmix64(h ^ u64::from(*b));
    }
    for ix in indices {
        h = splitmix64(h ^ *ix);
    }
    h
}

/// A fresh ChaCha8 stream for (`root`, `label`, `indices`).
pub fn stream(root: u64, label: &str, indices: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(root, label, indices))
}

/// Standard normal via Box-Muller on two uniform draws. Kept by hand so the
/// sampling path is pinned by this crate, not a distribution library.
pub fn next_standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    use rand::RngExt;
    // u1 in (0, 1] so the log is finite.
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
