//! Seeded randomness. Every stochastic step in the crate draws from a
//! [`ChaCha8Rng`] built here so runs are reproducible per seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Bound of the truncated normal used for weight initialization.
pub const TRUNCATION: f64 = 0.1;

/// Draws from a standard normal restricted to `[-bound, bound]` by
/// rejection, so the density inside the interval keeps its normal shape.
pub fn truncated_normal<R: Rng + ?Sized>(rng: &mut R, bound: f64) -> f64 {
    assert!(bound > 0.0, "truncation bound must be positive");
    loop {
        let x: f64 = rng.sample(StandardNormal);
        if (-bound..=bound).contains(&x) {
            return x;
        }
    }
}

pub fn truncated_normal_vec<R: Rng + ?Sized>(rng: &mut R, len: usize, bound: f64) -> Vec<f64> {
    (0..len).map(|_| truncated_normal(rng, bound)).collect()
}
