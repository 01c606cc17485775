#![allow(dead_code)]

use grandcouple_core::stats::{ks_p_value, ks_statistic};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Significance level shared by every goodness-of-fit check. Seeds are
/// fixed, so each check is deterministic; the level only guards against
/// an unlucky seed choice.
pub const LEVEL: f64 = 1e-4;

/// Pearson chi-square p-value of state counts against `probs`, pooling
/// cells with expected count below 5.
pub fn chi_square_p(counts: &[usize], probs: &[f64]) -> f64 {
    let n: usize = counts.iter().sum();
    let (mut stat, mut cells) = (0.0, 0usize);
    let (mut pool_o, mut pool_e) = (0.0, 0.0);
    for (&o, &p) in counts.iter().zip(probs) {
        let e = p * n as f64;
        if e == 0.0 {
            assert_eq!(o, 0, "draw on a null state");
            continue;
        }
        if e < 5.0 {
            pool_o += o as f64;
            pool_e += e;
            continue;
        }
        stat += (o as f64 - e).powi(2) / e;
        cells += 1;
    }
    if pool_e > 0.0 {
        stat += (pool_o - pool_e).powi(2) / pool_e;
        cells += 1;
    }
    if cells < 2 {
        return 1.0;
    }
    1.0 - ChiSquared::new((cells - 1) as f64).unwrap().cdf(stat)
}

pub fn ks_p(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    ks_p_value(ks_statistic(samples, cdf), samples.len())
}

/// Two-sample Kolmogorov–Smirnov p-value (asymptotic, effective size
/// `nm/(n+m)`).
pub fn ks2_p(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    let n_eff = (a.len() * b.len()) as f64 / (a.len() + b.len()) as f64;
    ks_p_value(d, n_eff.round() as usize)
}

/// `|k − np| ≤ z·√(np(1−p))`.
pub fn within_binomial(k: usize, n: usize, p: f64, z: f64) -> bool {
    let sd = (n as f64 * p * (1.0 - p)).sqrt();
    (k as f64 - n as f64 * p).abs() <= z * sd.max(1e-12)
}
