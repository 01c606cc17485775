//! Goodness-of-fit helpers for the statistical test suites.

use statrs::distribution::{ChiSquared, ContinuousCDF};

pub use grandcouple_core::stats::{ks_p_value, ks_statistic};

/// KS p-value of `samples` against a continuous `cdf`.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    ks_p_value(ks_statistic(samples, cdf), samples.len())
}

/// Pearson chi-square p-value of observed `counts` against `probs`.
/// Cells with expected count below 5 are pooled into one.
pub fn chi_square_test(counts: &[u64], probs: &[f64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut pooled = (0.0, 0.0);
    for (&o, &p) in counts.iter().zip(probs) {
        let e = p * n as f64;
        if e < 5.0 {
            pooled.0 += o as f64;
            pooled.1 += e;
        } else {
            cells.push((o as f64, e));
        }
    }
    if pooled.1 > 0.0 || pooled.0 > 0.0 {
        cells.push(pooled);
    }
    if cells.len() < 2 {
        return 1.0;
    }
    let stat: f64 = cells
        .iter()
        .map(|&(o, e)| {
            if e > 0.0 {
                (o - e).powi(2) / e
            } else if o > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .sum();
    if stat.is_infinite() {
        return 0.0;
    }
    let dist = ChiSquared::new((cells.len() - 1) as f64).expect("positive dof");
    1.0 - dist.cdf(stat)
}
