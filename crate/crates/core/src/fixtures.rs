//! Runtime matrices for tests, benches and the `compare --fixture` command.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};

/// Ten subproblems, four strategies `S1..S4`, costs in milliseconds.
/// `S1` is the strategy to select.
pub const DIDACTIC: [[f64; 4]; 10] = [
    [62., 408., 80., 150.],
    [90., 1134., 92., 154.],
    [155., 1904., 158., 233.],
    [231., 1451., 250., 407.],
    [198., 1580., 197., 422.],
    [146., 803., 170., 144.],
    [62., 611., 54., 115.],
    [63., 389., 111., 86.],
    [167., 560., 163., 670.],
    [83., 736., 120., 232.],
];

pub fn didactic() -> Vec<Vec<f64>> {
    DIDACTIC.iter().map(|r| r.to_vec()).collect()
}

pub fn didactic_labels() -> Vec<String> {
    (1..=4).map(|i| format!("S{i}")).collect()
}

/// `rows x factors.len()` costs `factor * exp(N(0, sigma))`, drawn from `seed`.
pub fn lognormal_matrix(rows: usize, factors: &[f64], sigma: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = LogNormal::new(0.0, sigma).expect("finite sigma");
    (0..rows)
        .map(|_| factors.iter().map(|f| f * noise.sample(&mut rng)).collect())
        .collect()
}

/// Positive integer costs in `1..=hi`, possibly with many ties.
pub fn integer_matrix(rows: usize, arms: usize, hi: u32, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..rows)
        .map(|_| (0..arms).map(|_| rng.random_range(1..=hi) as f64).collect())
        .collect()
}
