//! Goodness-of-fit helpers for checking samplers against exact distributions.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

impl ChiSquare {
    pub fn passes(&self, alpha: f64) -> bool {
        self.p_value >= alpha
    }
}

/// Pearson's chi-square test of observed counts against the uniform law on
/// the same categories.
pub fn chi_square_uniform(counts: &[u64]) -> ChiSquare {
    let k = counts.len();
    let total: u64 = counts.iter().sum();
    if k < 2 || total == 0 {
        return ChiSquare {
            statistic: 0.0,
            dof: k.saturating_sub(1),
            p_value: 1.0,
        };
    }
    let expected = total as f64 / k as f64;
    let statistic = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let dof = k - 1;
    let dist = ChiSquared::new(dof as f64).expect("dof >= 1");
    ChiSquare {
        statistic,
        dof,
        p_value: 1.0 - dist.cdf(statistic),
    }
}

/// Total-variation distance between observed frequencies and a reference
/// probability vector.
pub fn tv_distance(counts: &[u64], probs: &[f64]) -> f64 {
    assert_eq!(counts.len(), probs.len());
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 1.0;
    }
    0.5 * counts
        .iter()
        .zip(probs)
        .map(|(&c, &p)| (c as f64 / total as f64 - p).abs())
        .sum::<f64>()
}

pub fn tv_distance_uniform(counts: &[u64]) -> f64 {
    let p = 1.0 / counts.len() as f64;
    tv_distance(counts, &vec![p; counts.len()])
}

/// Sample mean and unbiased variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}
