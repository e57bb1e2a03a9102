//! Seeded fixtures shared by the benchmarks.

use pid_core::{NetworkSpec, WeightMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Widths of the reference architecture on the ten-feature synthetic suite.
pub const REFERENCE_WIDTHS: [usize; 6] = [10, 140, 100, 60, 20, 1];

/// Dense network with Glorot-uniform weights.
pub fn random_network(widths: &[usize], seed: u64) -> NetworkSpec {
    assert!(widths.len() >= 2, "need at least one weight layer");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = widths
        .windows(2)
        .map(|w| {
            let limit = (6.0 / (w[0] + w[1]) as f64).sqrt();
            let data = (0..w[0] * w[1])
                .map(|_| rng.random_range(-limit..limit))
                .collect();
            WeightMatrix::new(w[0], w[1], data).expect("shape matches data")
        })
        .collect();
    NetworkSpec::new(layers).expect("random weights are not all zero")
}

/// `[d, hidden..., 1]` with every hidden layer `width` units wide.
pub fn uniform_widths(d: usize, width: usize, hidden_layers: usize) -> Vec<usize> {
    let mut widths = vec![d];
    widths.extend(vec![width; hidden_layers]);
    widths.push(1);
    widths
}
