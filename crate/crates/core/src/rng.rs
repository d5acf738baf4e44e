//! Seeded randomness shared by initialisation, synthetic data and checks.

use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use rand_chacha::ChaCha8Rng as SeededRng;

/// Deterministic generator for `(seed, stream)`; streams are independent.
pub fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `len` samples uniform in `[-amp, amp)`.
pub fn uniform_vec(rng: &mut ChaCha8Rng, len: usize, amp: f64) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(-amp..amp)).collect()
}

/// Approximately Gaussian samples (sum of four uniforms, unit variance).
pub fn noise_vec(rng: &mut ChaCha8Rng, len: usize, std_dev: f64) -> Vec<f64> {
    (0..len)
        .map(|_| {
            let s: f64 = (0..4).map(|_| rng.gen_range(-1.0..1.0)).sum();
            s * std_dev * crate::math::sqrt(3.0 / 4.0)
        })
        .collect()
}
