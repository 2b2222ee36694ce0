//! Order-stable summary statistics.

use serde::{Deserialize, Serialize};

/// Pairwise summation; the result depends only on the order of `xs`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    pairwise_sum(xs) / xs.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub stderr: f64,
    /// Normal-approximation 95% interval.
    pub ci95: (f64, f64),
}

impl Summary {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        let m = mean(xs);
        let sd = if n > 1 {
            let dev: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
            (pairwise_sum(&dev) / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        let stderr = if n > 0 { sd / (n as f64).sqrt() } else { 0.0 };
        Self {
            n,
            mean: m,
            sd,
            stderr,
            ci95: (m - 1.96 * stderr, m + 1.96 * stderr),
        }
    }
}
