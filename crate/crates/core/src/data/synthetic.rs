//! Seeded synthetic binary-classification fixtures.
//!
//! Values are rounded to three decimals so each feature has a finite
//! resolution, like measured data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::Dataset;

fn round3(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}

fn names(m: usize) -> Vec<String> {
    (0..m).map(|j| format!("x{j}")).collect()
}

/// Two Gaussian clouds whose means differ by `separation` on the first two
/// features; the remaining features are pure noise.
pub fn gaussian_blobs(n: usize, m: usize, separation: f64, seed: u64) -> Dataset {
    assert!(m >= 2, "need at least two features");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let y = (i % 2) as u8;
        let shift = if y == 1 { separation } else { 0.0 };
        let row = (0..m)
            .map(|j| {
                let mu = if j < 2 { shift } else { 0.0 };
                round3(mu + normal.sample(&mut rng))
            })
            .collect();
        rows.push(row);
        labels.push(y);
    }
    Dataset::new(rows, labels, names(m)).expect("well-formed synthetic data")
}

/// Uniform points labelled by an axis-aligned rule with `noise` label flips:
/// `y = (x0 > 0.6 and x1 <= 0.3) or x2 > 0.8`.
pub fn axis_rules(n: usize, m: usize, noise: f64, seed: u64) -> Dataset {
    assert!(m >= 3, "need at least three features");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<f64> = (0..m).map(|_| round3(rng.gen::<f64>())).collect();
        let mut y = (row[0] > 0.6 && row[1] <= 0.3) || row[2] > 0.8;
        if rng.gen::<f64>() < noise {
            y = !y;
        }
        rows.push(row);
        labels.push(u8::from(y));
    }
    Dataset::new(rows, labels, names(m)).expect("well-formed synthetic data")
}
