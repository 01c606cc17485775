//! Bounds on the optimal expected cluster count `G*` of a family of
//! marginals, and an exact LP oracle for tiny finite families.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // float methods under no_std
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::measures::{self, default_scheme, hockey_stick, tv_finite, Measure};
use crate::simplex;

/// Largest family handled by the exhaustive supremum over orderings.
pub const EXHAUSTIVE_MAX_C: usize = 8;

/// Largest product-of-supports size accepted by [`lp_optimal_g`].
pub const LP_MAX_TUPLES: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LowerBoundMode {
    Exhaustive,
    Fixed(Vec<usize>),
    Greedy,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LowerBound {
    pub value: f64,
    /// Ordering attaining `value`.
    pub ordering: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub c: usize,
    pub lower: f64,
    pub upper: f64,
    pub lp_exact: Option<f64>,
    pub estimated: Option<(f64, f64)>,
    pub ordering: Vec<usize>,
}

/// `E_{|rest|}(P^i ‖ mean of P^rest)`.
fn suffix_term(ms: &[Measure], i: usize, rest: &[usize]) -> Result<f64> {
    if rest.is_empty() {
        return Ok(0.0);
    }
    let m = rest.len() as f64;
    if let Measure::Finite(p) = &ms[i] {
        let mut acc = 0.0;
        for (s, &ps) in p.probs().iter().enumerate() {
            if ps == 0.0 {
                continue;
            }
            let sum: f64 = rest
                .iter()
                .map(|&j| match &ms[j] {
                    Measure::Finite(q) => q.probs()[s],
                    _ => f64::NAN,
                })
                .sum();
            acc += (ps - sum).max(0.0);
        }
        if acc.is_nan() {
            return Err(Error::SpaceMismatch(
                "finite and non-finite marginals mixed".into(),
            ));
        }
        return Ok(acc);
    }
    let others: Vec<Measure> = rest.iter().map(|&j| ms[j].clone()).collect();
    let bar = measures::barycenter(&others, None)?;
    let scheme = default_scheme(&ms[i]).ok_or(Error::UnsupportedKind {
        op: "lower_bound_g",
        kind: ms[i].kind(),
    })?;
    Ok(hockey_stick(&ms[i], &bar, m, scheme)?.value)
}

/// `1 + Σ_k E_{C−k}(P^{σ(k)} ‖ mean of the suffix)` for a given ordering σ.
pub fn lower_bound_fixed(ms: &[Measure], sigma: &[usize]) -> Result<f64> {
    let c = ms.len();
    let mut seen = vec![false; c];
    if sigma.len() != c
        || sigma
            .iter()
            .any(|&i| i >= c || core::mem::replace(&mut seen[i], true))
    {
        return Err(invalid("ordering must be a permutation of 0..C"));
    }
    let mut total = 1.0;
    for k in 0..c.saturating_sub(1) {
        total += suffix_term(ms, sigma[k], &sigma[k + 1..])?;
    }
    Ok(total)
}

/// Lower bound on `G*` under the chosen ordering strategy.
pub fn lower_bound_g(ms: &[Measure], mode: &LowerBoundMode) -> Result<LowerBound> {
    let c = ms.len();
    if c == 0 {
        return Err(invalid("no marginals"));
    }
    crate::poisson::common_space(ms)?;
    match mode {
        LowerBoundMode::Fixed(sigma) => Ok(LowerBound {
            value: lower_bound_fixed(ms, sigma)?,
            ordering: sigma.clone(),
        }),
        LowerBoundMode::Greedy => {
            let mut left: Vec<usize> = (0..c).collect();
            let mut order = Vec::with_capacity(c);
            let mut total = 1.0;
            while left.len() > 1 {
                let mut best = (f64::NEG_INFINITY, 0);
                for (pos, &i) in left.iter().enumerate() {
                    let rest: Vec<usize> = left.iter().copied().filter(|&j| j != i).collect();
                    let v = suffix_term(ms, i, &rest)?;
                    if v > best.0 {
                        best = (v, pos);
                    }
                }
                total += best.0;
                order.push(left.remove(best.1));
            }
            order.extend(left);
            Ok(LowerBound {
                value: total,
                ordering: order,
            })
        }
        LowerBoundMode::Exhaustive => {
            if c > EXHAUSTIVE_MAX_C {
                return Err(Error::TooLarge(alloc::format!(
                    "exhaustive lower bound needs C <= {EXHAUSTIVE_MAX_C}, got {c}"
                )));
            }
            // f(S) = max_{i∈S} E_{|S|−1}(P^i ‖ mean P^{S∖i}) + f(S∖i)
            let full = (1usize << c) - 1;
            let mut f = vec![0.0f64; full + 1];
            let mut arg = vec![usize::MAX; full + 1];
            for s in 1..=full {
                if s.count_ones() < 2 {
                    continue;
                }
                let members: Vec<usize> = (0..c).filter(|&i| s >> i & 1 == 1).collect();
                let mut best = f64::NEG_INFINITY;
                for &i in &members {
                    let rest: Vec<usize> = members.iter().copied().filter(|&j| j != i).collect();
                    let v = suffix_term(ms, i, &rest)? + f[s & !(1 << i)];
                    if v > best {
                        best = v;
                        arg[s] = i;
                    }
                }
                f[s] = best;
            }
            let mut order = Vec::with_capacity(c);
            let mut s = full;
            while s.count_ones() > 1 {
                order.push(arg[s]);
                s &= !(1 << arg[s]);
            }
            order.push(s.trailing_zeros() as usize);
            Ok(LowerBound {
                value: 1.0 + f[full],
                ordering: order,
            })
        }
    }
}

fn check_tv_matrix(tv: &[Vec<f64>]) -> Result<usize> {
    let c = tv.len();
    if c == 0 || tv.iter().any(|r| r.len() != c) {
        return Err(invalid("TV matrix must be square and nonempty"));
    }
    for i in 0..c {
        if tv[i][i] != 0.0 {
            return Err(invalid("TV matrix must have a zero diagonal"));
        }
        for j in 0..c {
            let v = tv[i][j];
            if !(0.0..=1.0).contains(&v) || (v - tv[j][i]).abs() > 1e-12 {
                return Err(invalid(
                    "TV matrix must be symmetric with entries in [0, 1]",
                ));
            }
        }
    }
    Ok(c)
}

/// `(1 + √(1 + 8 Σ_{i<j} 2 tv_ij / (1 + tv_ij))) / 2`.
pub fn upper_bound_g(tv: &[Vec<f64>]) -> Result<f64> {
    let c = check_tv_matrix(tv)?;
    let mut s = 0.0;
    for i in 0..c {
        for j in i + 1..c {
            s += 2.0 * tv[i][j] / (1.0 + tv[i][j]);
        }
    }
    Ok((1.0 + (1.0 + 8.0 * s).sqrt()) / 2.0)
}

/// Poisson-matching guarantee `(1 − tv)/(1 + tv)` on the pairwise match probability.
pub fn pml_pairwise_bound(tv: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&tv) {
        return Err(invalid("tv must lie in [0, 1]"));
    }
    Ok((1.0 - tv) / (1.0 + tv))
}

/// Pairwise total-variation matrix (exact for finite, closed form for
/// shared-variance isotropic Gaussians, quadrature in 1-D otherwise).
pub fn tv_matrix(ms: &[Measure]) -> Result<Vec<Vec<f64>>> {
    let c = ms.len();
    let mut tv = vec![vec![0.0; c]; c];
    for i in 0..c {
        for j in i + 1..c {
            let v = match (&ms[i], &ms[j]) {
                (Measure::Finite(_), Measure::Finite(_)) => tv_finite(&ms[i], &ms[j])?,
                (Measure::GaussianDiag(a), Measure::GaussianDiag(b))
                    if a.var().iter().chain(b.var()).all(|&v| v == a.var()[0]) =>
                {
                    measures::tv_gaussian_shared_cov(a.mean(), b.mean(), a.var()[0].sqrt())?
                }
                _ => {
                    let scheme = default_scheme(&ms[i]).ok_or(Error::UnsupportedKind {
                        op: "tv_matrix",
                        kind: ms[i].kind(),
                    })?;
                    hockey_stick(&ms[i], &ms[j], 1.0, scheme)?.value
                }
            };
            let v = v.clamp(0.0, 1.0);
            tv[i][j] = v;
            tv[j][i] = v;
        }
    }
    Ok(tv)
}

/// Exact `G*` by linear programming over joint mass functions on the
/// product of supports.
pub fn lp_optimal_g(ms: &[Measure]) -> Result<f64> {
    let c = ms.len();
    if c == 0 {
        return Err(invalid("no marginals"));
    }
    let probs: Vec<&[f64]> = ms
        .iter()
        .map(|m| match m {
            Measure::Finite(f) => Ok(f.probs()),
            other => Err(Error::UnsupportedKind {
                op: "lp_optimal_g",
                kind: other.kind(),
            }),
        })
        .collect::<Result<_>>()?;
    crate::poisson::common_space(ms)?;
    let supports: Vec<Vec<usize>> = probs
        .iter()
        .map(|p| (0..p.len()).filter(|&s| p[s] > 0.0).collect())
        .collect();
    let mut n_tuples: usize = 1;
    for s in &supports {
        n_tuples = n_tuples
            .checked_mul(s.len())
            .filter(|&v| v <= LP_MAX_TUPLES)
            .ok_or_else(|| {
                Error::TooLarge(alloc::format!(
                    "product of supports exceeds {LP_MAX_TUPLES} tuples"
                ))
            })?;
    }
    // enumerate tuples (mixed radix over supports)
    let mut tuples: Vec<Vec<usize>> = Vec::with_capacity(n_tuples);
    let mut idx = vec![0usize; c];
    for _ in 0..n_tuples {
        tuples.push((0..c).map(|k| supports[k][idx[k]]).collect());
        for k in (0..c).rev() {
            idx[k] += 1;
            if idx[k] < supports[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
    let cost: Vec<f64> = tuples
        .iter()
        .map(|t| {
            let mut v = t.clone();
            v.sort_unstable();
            v.dedup();
            v.len() as f64
        })
        .collect();
    let mut a = Vec::new();
    let mut b = Vec::new();
    for k in 0..c {
        // every marginal's constraints sum to the same total; drop one for k ≥ 1
        let keep = if k == 0 {
            supports[k].len()
        } else {
            supports[k].len() - 1
        };
        for &s in &supports[k][..keep] {
            a.push(
                tuples
                    .iter()
                    .map(|t| if t[k] == s { 1.0 } else { 0.0 })
                    .collect(),
            );
            b.push(probs[k][s]);
        }
    }
    Ok(simplex::minimize(&a, &b, &cost)?.value)
}

/// Lower/upper sandwich for a family, with the LP value when it is small
/// and finite.
pub fn bound_report(ms: &[Measure], mode: &LowerBoundMode) -> Result<BoundReport> {
    let lb = lower_bound_g(ms, mode)?;
    let upper = upper_bound_g(&tv_matrix(ms)?)?;
    let lp_exact = match lp_optimal_g(ms) {
        Ok(v) => Some(v),
        Err(Error::UnsupportedKind { .. }) | Err(Error::TooLarge(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(BoundReport {
        c: ms.len(),
        lower: lb.value,
        upper,
        lp_exact,
        estimated: None,
        ordering: lb.ordering,
    })
}
