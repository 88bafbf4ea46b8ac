//! Shared fixtures for the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sotdd::Dataset;

/// `n` uniform points in `[-1, 1]^d` with labels cycling over `classes`.
pub fn uniform_dataset(n: usize, d: usize, classes: i64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let features = (0..n * d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let labels = (0..n as i64).map(|i| i % classes).collect();
    Dataset::new(features, labels, d, format!("bench{seed}")).expect("valid fixture")
}

/// `n` sorted uniform values in `[-1, 1]`.
pub fn sorted_values(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    v.sort_by(f64::total_cmp);
    v
}
