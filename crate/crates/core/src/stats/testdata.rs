//! Shared tables for the statistics tests.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::sample::SampleTable;

/// x=0: 10 positives, 20 negatives; x=1: 20 positives, 10 negatives.
pub fn two_by_two() -> SampleTable {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (v, pos, neg) in [(0.0, 10, 20), (1.0, 20, 10)] {
        for i in 0..pos + neg {
            x.push(vec![v]);
            y.push(u8::from(i < pos));
        }
    }
    SampleTable::from_xy(&["flag"], &x, &y)
}

pub fn simulated(seed: u64, n: usize, beta: &[f64]) -> SampleTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = beta.len() - 1;
    let mut x = Vec::new();
    let mut y = Vec::new();
    for _ in 0..n {
        let row: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..4.0)).collect();
        let z = beta[0] + row.iter().zip(&beta[1..]).map(|(a, b)| a * b).sum::<f64>();
        y.push(u8::from(rng.random::<f64>() < 1.0 / (1.0 + (-z).exp())));
        x.push(row);
    }
    let names: Vec<String> = (1..=k).map(|i| format!("x{i}")).collect();
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    SampleTable::from_xy(&names, &x, &y)
}

