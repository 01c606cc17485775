//! Pairwise maximal coupling, maximal list coupling and multi-marginal
//! couplers built from them.
//!
//! Equal values only ever arise by copying one draw, so cluster detection
//! is bitwise (see [`CouplingDraw`]).

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // float methods under no_std
use num_traits::Float;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::measures::{Measure, SampleSpace};
use crate::point::{CouplingDraw, Point};
use crate::rng::RngStream;
use crate::special::log_sum_exp;
use crate::stats::mean_se;

/// Cap on rejection loops; reaching it signals a pathological pair of laws.
pub const REJECTION_CAP: u64 = 10_000_000;

/// A sampleable law with an evaluable log-density over values of type `V`.
///
/// Implemented by [`Measure`] and by the proposal/lifted laws in `mh`, so
/// the same maximal coupling serves both measure families and MH kernels.
pub trait Law {
    type Value: Clone;
    fn log_density(&self, v: &Self::Value) -> f64;
    fn draw(&self, rng: &mut RngStream) -> Self::Value;
}

impl Law for Measure {
    type Value = Point;

    fn log_density(&self, v: &Point) -> f64 {
        Measure::log_density(self, v).unwrap_or(f64::NEG_INFINITY)
    }

    fn draw(&self, rng: &mut RngStream) -> Point {
        self.sample(rng)
    }
}

#[inline]
fn log_uniform(rng: &mut RngStream) -> f64 {
    rng.random::<f64>().ln()
}

/// Second half of the maximal coupling: given `x ~ p` with `lp_x = ln p(x)`,
/// draw `y ~ q` with `Pr(y = x) = 1 − d_TV(p, q)`. Returns `(y, y is x)`.
pub fn maximal_pair_given<P, Q>(
    x: &P::Value,
    lp_x: f64,
    p: &P,
    q: &Q,
    rng: &mut RngStream,
) -> Result<(P::Value, bool)>
where
    P: Law,
    Q: Law<Value = P::Value>,
{
    if log_uniform(rng) + lp_x <= q.log_density(x) {
        return Ok((x.clone(), true));
    }
    for _ in 0..REJECTION_CAP {
        let y = q.draw(rng);
        let lq = q.log_density(&y);
        if log_uniform(rng) + lq > p.log_density(&y) {
            return Ok((y, false));
        }
    }
    Err(Error::IterationCap {
        context: "maximal coupling residual",
        cap: REJECTION_CAP,
    })
}

/// Maximal coupling of `p` and `q`.
pub fn maximal_pair<P, Q>(p: &P, q: &Q, rng: &mut RngStream) -> Result<(P::Value, P::Value)>
where
    P: Law,
    Q: Law<Value = P::Value>,
{
    let x = p.draw(rng);
    let lp = p.log_density(&x);
    let (y, _) = maximal_pair_given(&x, lp, p, q, rng)?;
    Ok((x, y))
}

fn check_common_space(ms: &[&Measure]) -> Result<SampleSpace> {
    let space = ms
        .first()
        .ok_or_else(|| invalid("no measures given"))?
        .space();
    if ms.iter().any(|m| m.space() != space) {
        return Err(Error::SpaceMismatch(
            "measures live on different spaces".into(),
        ));
    }
    Ok(space)
}

#[derive(Clone, Debug)]
pub struct ListCouplingResult {
    pub x: Point,
    pub ys: Vec<Point>,
    /// Zero-based index `j` with `ys[j] == x`, if the list matched.
    pub matched_index: Option<usize>,
}

/// Draw `Z ~ ν_j` until `U ≤ (1 − μ(Z)/(m ν̄(Z)))₊`.
fn residual_draw(mu: &Measure, nus: &[Measure], j: usize, rng: &mut RngStream) -> Result<Point> {
    for _ in 0..REJECTION_CAP {
        let z = nus[j].sample(rng);
        let lm_nubar = log_sum_exp(nus.iter().map(|n| Law::log_density(n, &z)));
        let lmu = Law::log_density(mu, &z);
        let a = 1.0 - (lmu - lm_nubar).exp();
        if a > 0.0 && rng.random::<f64>() <= a {
            return Ok(z);
        }
    }
    Err(Error::IterationCap {
        context: "list-coupling residual",
        cap: REJECTION_CAP,
    })
}

/// Maximal list coupling of `X ~ μ` with `Y^j ~ ν^j`: the event
/// `X ∈ {Y^1..Y^m}` has probability `1 − E_m(μ‖ν̄)`. Unmatched coordinates
/// are independent residual draws.
pub fn list_coupling(
    mu: &Measure,
    nus: &[Measure],
    rng: &mut RngStream,
) -> Result<ListCouplingResult> {
    if nus.is_empty() {
        return Err(invalid("list coupling needs at least one ν"));
    }
    let mut all: Vec<&Measure> = vec![mu];
    all.extend(nus.iter());
    check_common_space(&all)?;

    let x = mu.sample(rng);
    let lmu = Law::log_density(mu, &x);
    let lnu: Vec<f64> = nus.iter().map(|n| Law::log_density(n, &x)).collect();
    let lsum = log_sum_exp(lnu.iter().copied()); // ln(m ν̄(x))
    let matched = if log_uniform(rng) <= lsum - lmu {
        // I ∝ ν_j(x)
        let mut u = rng.random::<f64>() * lsum.exp();
        let mut pick = None;
        for (j, l) in lnu.iter().enumerate() {
            let w = l.exp();
            if w > 0.0 {
                pick = Some(j);
                if u < w {
                    break;
                }
                u -= w;
            }
        }
        pick
    } else {
        None
    };
    let ys = (0..nus.len())
        .map(|j| {
            if Some(j) == matched {
                Ok(x.clone())
            } else {
                residual_draw(mu, nus, j, rng)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ListCouplingResult {
        x,
        ys,
        matched_index: matched,
    })
}

/// Order in which the greedy recursion picks anchors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Ordering {
    Fixed(Vec<usize>),
    Identity,
    Random,
}

impl Ordering {
    fn realize(&self, c: usize, rng: &mut RngStream) -> Result<Vec<usize>> {
        match self {
            Ordering::Identity => Ok((0..c).collect()),
            Ordering::Random => {
                let mut p: Vec<usize> = (0..c).collect();
                p.shuffle(rng);
                Ok(p)
            }
            Ordering::Fixed(p) => {
                let mut seen = vec![false; c];
                if p.len() != c
                    || p.iter()
                        .any(|&i| i >= c || core::mem::replace(&mut seen[i], true))
                {
                    return Err(invalid("ordering must be a permutation of 0..C"));
                }
                Ok(p.clone())
            }
        }
    }
}

/// Laws that are mixtures over a common finite set of cells with a fixed
/// within-cell shape, so every density ratio is constant on each cell.
/// Finite measures (one state per cell) and shifted exponentials (cells
/// between sorted shifts, `e^{-x}` shape) both have this form.
#[derive(Clone, Debug)]
pub(crate) struct CellLaws {
    masses: Vec<Vec<f64>>,
    cells: Cells,
}

#[derive(Clone, Debug)]
enum Cells {
    States,
    /// Boundaries `c_0 < … < c_{K-1}`; cell `k` is `[c_k, c_{k+1})`, the
    /// last one unbounded.
    ExpIntervals(Vec<f64>),
}

impl CellLaws {
    pub(crate) fn from_measures(ms: &[Measure]) -> Result<Self> {
        if ms.is_empty() {
            return Err(invalid("no marginals given"));
        }
        if ms.iter().all(|m| matches!(m, Measure::Finite(_))) {
            let refs: Vec<&Measure> = ms.iter().collect();
            check_common_space(&refs)?;
            let masses = ms
                .iter()
                .map(|m| match m {
                    Measure::Finite(f) => f.probs().to_vec(),
                    _ => unreachable!(),
                })
                .collect();
            return Ok(Self {
                masses,
                cells: Cells::States,
            });
        }
        if ms
            .iter()
            .all(|m| matches!(m, Measure::ShiftedExponential(_)))
        {
            let shifts: Vec<f64> = ms
                .iter()
                .map(|m| match m {
                    Measure::ShiftedExponential(e) => e.shift(),
                    _ => unreachable!(),
                })
                .collect();
            let mut bounds = shifts.clone();
            bounds.sort_by(|a, b| a.total_cmp(b));
            bounds.dedup();
            let k = bounds.len();
            let masses = shifts
                .iter()
                .map(|&s| {
                    (0..k)
                        .map(|c| {
                            let lo = bounds[c];
                            if lo < s {
                                return 0.0;
                            }
                            let head = (-(lo - s)).exp();
                            if c + 1 < k {
                                head * (1.0 - (-(bounds[c + 1] - lo)).exp())
                            } else {
                                head
                            }
                        })
                        .collect()
                })
                .collect();
            return Ok(Self {
                masses,
                cells: Cells::ExpIntervals(bounds),
            });
        }
        let kind = ms
            .iter()
            .find(|m| !matches!(m, Measure::Finite(_) | Measure::ShiftedExponential(_)))
            .unwrap_or(&ms[0])
            .kind();
        Err(Error::UnsupportedKind {
            op: "greedy_recursive_list",
            kind,
        })
    }

    fn sample_cell(w: &[f64], rng: &mut RngStream) -> usize {
        let total: f64 = w.iter().sum();
        let mut u = rng.random::<f64>() * total;
        let mut last = 0;
        for (k, &m) in w.iter().enumerate() {
            if m > 0.0 {
                last = k;
                if u < m {
                    return k;
                }
                u -= m;
            }
        }
        last
    }

    fn point_in_cell(&self, k: usize, rng: &mut RngStream) -> Point {
        match &self.cells {
            Cells::States => Point::State(k),
            Cells::ExpIntervals(b) => {
                let lo = b[k];
                let u: f64 = rng.random();
                let x = if k + 1 < b.len() {
                    let width = b[k + 1] - lo;
                    // truncated Exp(1) on [lo, lo + width)
                    let z = -(-u * (-(-width).exp_m1())).ln_1p();
                    lo + z.min(width * (1.0 - f64::EPSILON))
                } else {
                    lo - (1.0 - u).ln()
                };
                Point::scalar(x)
            }
        }
    }
}

/// Residual cell masses `ν_j(1 − min{1, μ/(m ν̄)})`, normalized; `m_nubar`
/// is the unnormalized sum of the list laws per cell.
pub(crate) fn residual_masses(mu: &[f64], nu: &[f64], m_nubar: &[f64]) -> Vec<f64> {
    let mut r: Vec<f64> = nu
        .iter()
        .zip(mu)
        .zip(m_nubar)
        .map(|((&v, &a), &s)| {
            if s > 0.0 {
                v * (1.0 - (a / s).min(1.0))
            } else {
                0.0
            }
        })
        .collect();
    let z: f64 = r.iter().sum();
    if z > 0.0 {
        r.iter_mut().for_each(|x| *x /= z);
        r
    } else {
        // Only reachable when this coordinate matches with probability one.
        nu.to_vec()
    }
}

/// Greedy recursive list coupling: anchor the first remaining coordinate
/// under `ordering`, list-couple it to the rest with exact residual laws,
/// drop the anchor (and its partner) and recurse on the residuals.
///
/// Supports finite measures and the shifted-exponential family.
pub fn greedy_recursive_list(
    marginals: &[Measure],
    ordering: &Ordering,
    rng: &mut RngStream,
) -> Result<CouplingDraw> {
    let laws = CellLaws::from_measures(marginals)?;
    let c = marginals.len();
    let order = ordering.realize(c, rng)?;
    let mut values: Vec<Option<Point>> = vec![None; c];
    let mut current: Vec<Vec<f64>> = laws.masses.clone();
    let mut remaining: Vec<usize> = order;
    let k = current[0].len();

    while let Some((&anchor, rest)) = remaining.split_first() {
        let a = &current[anchor];
        let cell = CellLaws::sample_cell(a, rng);
        let x = laws.point_in_cell(cell, rng);
        if rest.is_empty() {
            values[anchor] = Some(x);
            break;
        }
        let mut m_nubar = vec![0.0; k];
        for &j in rest {
            for (s, v) in m_nubar.iter_mut().zip(&current[j]) {
                *s += v;
            }
        }
        let matched = if rng.random::<f64>() * a[cell] <= m_nubar[cell] {
            let mut u = rng.random::<f64>() * m_nubar[cell];
            let mut pick = None;
            for &j in rest {
                let w = current[j][cell];
                if w > 0.0 {
                    pick = Some(j);
                    if u < w {
                        break;
                    }
                    u -= w;
                }
            }
            pick
        } else {
            None
        };
        let a = a.clone();
        for &j in rest {
            if Some(j) != matched {
                current[j] = residual_masses(&a, &current[j], &m_nubar);
            }
        }
        if let Some(j) = matched {
            values[j] = Some(x.clone());
        }
        values[anchor] = Some(x);
        remaining = rest
            .iter()
            .copied()
            .filter(|&j| Some(j) != matched)
            .collect();
    }
    Ok(CouplingDraw::from_values(
        values
            .into_iter()
            .map(|v| v.expect("every coordinate assigned"))
            .collect(),
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Anchor {
    Fixed(usize),
    Random,
}

/// Couple every coordinate to one anchor by maximal coupling; residual draws
/// are conditionally independent given the anchor value.
pub fn star_coupling(
    marginals: &[Measure],
    anchor: Anchor,
    rng: &mut RngStream,
) -> Result<CouplingDraw> {
    let refs: Vec<&Measure> = marginals.iter().collect();
    check_common_space(&refs)?;
    let c = marginals.len();
    let a = match anchor {
        Anchor::Fixed(i) if i < c => i,
        Anchor::Fixed(_) => return Err(invalid("anchor index out of range")),
        Anchor::Random => rng.random_range(0..c),
    };
    let p = &marginals[a];
    let x = p.sample(rng);
    let lp = Law::log_density(p, &x);
    let mut values = Vec::with_capacity(c);
    for (i, q) in marginals.iter().enumerate() {
        if i == a {
            values.push(x.clone());
        } else {
            values.push(maximal_pair_given(&x, lp, p, q, rng)?.0);
        }
    }
    Ok(CouplingDraw::from_values(values))
}

/// Maximal coupling along a random chain `σ(1) → σ(2) → …`, each step
/// conditioned on the previous draw.
pub fn sequence_coupling(marginals: &[Measure], rng: &mut RngStream) -> Result<CouplingDraw> {
    let refs: Vec<&Measure> = marginals.iter().collect();
    check_common_space(&refs)?;
    let c = marginals.len();
    let mut perm: Vec<usize> = (0..c).collect();
    perm.shuffle(rng);
    let mut values: Vec<Option<Point>> = vec![None; c];
    let first = &marginals[perm[0]];
    let mut prev = first.sample(rng);
    let mut prev_lp = Law::log_density(first, &prev);
    values[perm[0]] = Some(prev.clone());
    for w in perm.windows(2) {
        let (p, q) = (&marginals[w[0]], &marginals[w[1]]);
        let (y, _) = maximal_pair_given(&prev, prev_lp, p, q, rng)?;
        prev_lp = Law::log_density(q, &y);
        values[w[1]] = Some(y.clone());
        prev = y;
    }
    Ok(CouplingDraw::from_values(
        values.into_iter().map(|v| v.expect("assigned")).collect(),
    ))
}

/// A multi-marginal coupling procedure.
pub trait Coupler {
    fn name(&self) -> String;
    fn couple(&self, marginals: &[Measure], rng: &mut RngStream) -> Result<CouplingDraw>;
}

#[derive(Clone, Debug)]
pub struct GreedyList(pub Ordering);

impl Coupler for GreedyList {
    fn name(&self) -> String {
        "list".into()
    }
    fn couple(&self, marginals: &[Measure], rng: &mut RngStream) -> Result<CouplingDraw> {
        greedy_recursive_list(marginals, &self.0, rng)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Star(pub Anchor);

impl Coupler for Star {
    fn name(&self) -> String {
        match self.0 {
            Anchor::Random => "random-anchor".into(),
            Anchor::Fixed(i) => alloc::format!("anchor-{i}"),
        }
    }
    fn couple(&self, marginals: &[Measure], rng: &mut RngStream) -> Result<CouplingDraw> {
        star_coupling(marginals, self.0, rng)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Sequence;

impl Coupler for Sequence {
    fn name(&self) -> String {
        "random-sequence".into()
    }
    fn couple(&self, marginals: &[Measure], rng: &mut RngStream) -> Result<CouplingDraw> {
        sequence_coupling(marginals, rng)
    }
}

/// Mean and standard error of the cluster count over `n_runs` draws.
pub fn estimate_expected_g(
    coupler: &dyn Coupler,
    marginals: &[Measure],
    n_runs: usize,
    rng: &mut RngStream,
) -> Result<(f64, f64)> {
    if n_runs == 0 {
        return Err(invalid("n_runs must be >= 1"));
    }
    let gs = (0..n_runs)
        .map(|_| coupler.couple(marginals, rng).map(|d| d.g as f64))
        .collect::<Result<Vec<_>>>()?;
    Ok(mean_se(&gs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fin(p: &[f64]) -> Measure {
        Measure::finite(p.to_vec()).unwrap()
    }

    #[test]
    fn maximal_pair_identical_and_disjoint() {
        let mut rng = RngStream::new(5);
        let p = fin(&[0.2, 0.3, 0.5]);
        for _ in 0..500 {
            let (x, y) = maximal_pair(&p, &p, &mut rng).unwrap();
            assert!(x.same_bits(&y));
        }
        let a = fin(&[1.0, 0.0]);
        let b = fin(&[0.0, 1.0]);
        for _ in 0..500 {
            let (x, y) = maximal_pair(&a, &b, &mut rng).unwrap();
            assert_eq!((x, y), (Point::State(0), Point::State(1)));
        }
    }

    #[test]
    fn maximal_pair_rate() {
        let mut rng = RngStream::new(9);
        let p = fin(&[0.5, 0.5, 0.0]);
        let q = fin(&[0.0, 0.5, 0.5]);
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| {
                let (x, y) = maximal_pair(&p, &q, &mut rng).unwrap();
                x == y
            })
            .count();
        let rate = hits as f64 / n as f64;
        assert!((rate - 0.5).abs() < 3.0 * (0.25 / n as f64).sqrt());
    }

    #[test]
    fn list_coupling_identical() {
        let mut rng = RngStream::new(2);
        let p = fin(&[0.3, 0.7]);
        let mut counts = [0usize; 2];
        for _ in 0..20_000 {
            let r = list_coupling(&p, &[p.clone(), p.clone()], &mut rng).unwrap();
            let j = r.matched_index.expect("always matched");
            assert!(r.ys[j].same_bits(&r.x));
            counts[j] += 1;
        }
        assert!((counts[0] as f64 / 20_000.0 - 0.5).abs() < 0.02);
    }

    #[test]
    fn residual_masses_follow_formula() {
        let mu = [0.5, 0.5, 0.0];
        let nus = [[0.2, 0.0, 0.8], [0.6, 0.4, 0.0]];
        let s: Vec<f64> = (0..3).map(|k| nus[0][k] + nus[1][k]).collect();
        let r = residual_masses(&mu, &nus[0], &s);
        // ν(1 − min(1, μ/(mν̄))) = (0.2·(1 − 0.5/0.8), 0, 0.8) normalized
        let raw = [0.2 * (1.0 - 0.5 / 0.8), 0.0, 0.8];
        let z: f64 = raw.iter().sum();
        for k in 0..3 {
            assert!((r[k] - raw[k] / z).abs() < 1e-15);
        }
    }

    #[test]
    fn greedy_degenerate_cases() {
        let mut rng = RngStream::new(4);
        let same: Vec<Measure> = (0..5).map(|_| fin(&[0.0, 1.0, 0.0])).collect();
        for _ in 0..100 {
            assert_eq!(
                greedy_recursive_list(&same, &Ordering::Random, &mut rng)
                    .unwrap()
                    .g,
                1
            );
        }
        let disjoint: Vec<Measure> = (0..4)
            .map(|i| {
                let mut p = vec![0.0; 4];
                p[i] = 1.0;
                fin(&p)
            })
            .collect();
        for _ in 0..100 {
            assert_eq!(
                greedy_recursive_list(&disjoint, &Ordering::Identity, &mut rng)
                    .unwrap()
                    .g,
                4
            );
        }
        let g = Measure::gaussian(vec![0.0], vec![1.0]).unwrap();
        assert!(matches!(
            greedy_recursive_list(&[g.clone(), g], &Ordering::Identity, &mut rng),
            Err(Error::UnsupportedKind { .. })
        ));
    }

    #[test]
    fn shifted_exponential_cells() {
        let ms: Vec<Measure> = (0..3)
            .map(|i| Measure::shifted_exponential(i as f64).unwrap())
            .collect();
        let laws = CellLaws::from_measures(&ms).unwrap();
        for row in &laws.masses {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        }
        assert!((laws.masses[0][0] - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert_eq!(laws.masses[2][..2], [0.0, 0.0]);
        let mut rng = RngStream::new(1);
        for _ in 0..1000 {
            let x = laws.point_in_cell(1, &mut rng).as_slice().unwrap()[0];
            assert!((1.0..2.0).contains(&x));
        }
    }

    #[test]
    fn star_and_sequence_identical() {
        let mut rng = RngStream::new(8);
        let same: Vec<Measure> = (0..6)
            .map(|_| Measure::gaussian(vec![0.0, 1.0], vec![1.0, 2.0]).unwrap())
            .collect();
        for _ in 0..50 {
            assert_eq!(star_coupling(&same, Anchor::Random, &mut rng).unwrap().g, 1);
            assert_eq!(sequence_coupling(&same, &mut rng).unwrap().g, 1);
        }
    }

    #[test]
    fn expected_g_trivial() {
        let mut rng = RngStream::new(3);
        let same: Vec<Measure> = (0..4).map(|_| fin(&[0.5, 0.5])).collect();
        assert_eq!(
            estimate_expected_g(&Star(Anchor::Fixed(0)), &same, 100, &mut rng).unwrap(),
            (1.0, 0.0)
        );
        assert!(estimate_expected_g(&Sequence, &same, 0, &mut rng).is_err());
    }
}
