//! Coupling-based convergence diagnostics: bounds on `‖π_t − π‖_TV` from
//! meeting-time tails, and weight harmonization over groups of chains.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // float methods under no_std
use num_traits::Float;
use rand::seq::SliceRandom;

use crate::couplings::Coupler;
use crate::error::{invalid, Error, Result};
use crate::grand::{self, ChainEnsemble, CoupledKernelSpec};
use crate::measures::{
    hockey_stick, Estimate, GaussianDiag, HockeyScheme, Measure, QUADRATURE_TOL,
};
use crate::point::{partition_by, slice_bit_cmp, Point};
use crate::quadrature::integrate_real_line;
use crate::rng::RngStream;
use crate::special::log_sum_exp;
use crate::stats::mean_se;

/// Initial mean and variance (per coordinate) of the AR(1) experiment.
pub const AR_INIT_MEAN: f64 = 10.0;
pub const AR_INIT_VAR: f64 = 5.0;

/// Minorization constant `ω = sup{a : π₀ ≥ a π}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Omega {
    pub value: f64,
    /// The density ratio has infimum zero; Johnson's bound is vacuous.
    pub vacuous: bool,
}

impl Omega {
    fn zero() -> Self {
        Self {
            value: 0.0,
            vacuous: true,
        }
    }
}

/// Closed form for diagonal Gaussians: per coordinate the ratio `π₀/π` is
/// minimized at a finite point whenever `var₀ > var`.
pub fn omega_gaussian(pi0: &GaussianDiag, pi: &GaussianDiag) -> Result<Omega> {
    if pi0.dim() != pi.dim() {
        return Err(Error::DimensionMismatch {
            expected: pi.dim(),
            got: pi0.dim(),
        });
    }
    let mut log_w = 0.0;
    for i in 0..pi.dim() {
        let (v0, v) = (pi0.var()[i], pi.var()[i]);
        let delta = pi0.mean()[i] - pi.mean()[i];
        if v0 < v || (v0 == v && delta != 0.0) {
            return Ok(Omega::zero());
        }
        if v0 > v {
            log_w += 0.5 * (v / v0).ln() - delta * delta / (2.0 * (v0 - v));
        }
    }
    Ok(Omega {
        value: log_w.exp(),
        vacuous: false,
    })
}

/// `ω` for the supported pairs; a Gaussian start against a heavy-tailed or
/// unbounded target has `ω = 0`.
pub fn omega(pi0: &Measure, pi: &Measure) -> Result<Omega> {
    match (pi0, pi) {
        (Measure::GaussianDiag(a), Measure::GaussianDiag(b)) => omega_gaussian(a, b),
        (Measure::GaussianDiag(_), Measure::StudentT(_)) => Ok(Omega::zero()),
        (
            Measure::UniformBox(_),
            Measure::GaussianDiag(_) | Measure::StudentT(_) | Measure::Banana(_),
        ) => Ok(Omega::zero()),
        _ => Err(Error::UnsupportedKind {
            op: "omega",
            kind: pi.kind(),
        }),
    }
}

/// `1 − (1 − ω)^C`.
pub fn johnson_denominator(omega: f64, c: usize) -> f64 {
    -((c as f64) * (-omega).ln_1p()).exp_m1()
}

/// `Pr(τ > t) / (1 − (1 − ω)^C)`; `None` when the bound is vacuous.
pub fn johnson_bound(tail: &[f64], omega: &Omega, c: usize) -> Option<Vec<f64>> {
    if omega.vacuous || !(omega.value > 0.0) || c == 0 {
        return None;
    }
    let den = johnson_denominator(omega.value.min(1.0), c);
    Some(tail.iter().map(|p| p / den).collect())
}

/// `C π(x) / (C π₀(x) + π(x))`, from log densities.
pub fn alpha_integrand(log_pi0: f64, log_pi: f64, c: usize) -> f64 {
    if log_pi == f64::NEG_INFINITY {
        return 0.0;
    }
    let c = c as f64;
    c / (c * (log_pi0 - log_pi).exp() + 1.0)
}

/// Monte Carlo estimate of the achievable list-level probability
/// `α_C ≥ E_{X∼π₀}[C π(X) / (C π₀(X) + π(X))]`.
pub fn estimate_alpha_c(
    pi0: &Measure,
    pi: &Measure,
    c: usize,
    n: usize,
    rng: &mut RngStream,
) -> Result<Estimate> {
    if n == 0 || c == 0 {
        return Err(invalid("n and C must be >= 1"));
    }
    let mut vals = Vec::with_capacity(n);
    for _ in 0..n {
        let x = pi0.sample(rng);
        vals.push(alpha_integrand(
            pi0.log_density(&x)?,
            pi.log_density(&x)?,
            c,
        ));
    }
    let (value, se) = mean_se(&vals);
    Ok(Estimate { value, se })
}

/// The same expectation by quadrature, for 1-D measures.
pub fn alpha_c_quadrature_1d(pi0: &Measure, pi: &Measure, c: usize) -> Result<f64> {
    let mut bps = pi0.breakpoints_1d();
    bps.extend(pi.breakpoints_1d());
    let mut err = None;
    let v = integrate_real_line(
        |x| {
            let p = Point::scalar(x);
            match (pi0.log_density(&p), pi.log_density(&p)) {
                (Ok(l0), Ok(l)) if l0 > f64::NEG_INFINITY => l0.exp() * alpha_integrand(l0, l, c),
                (Ok(_), Ok(_)) => 0.0,
                (Err(e), _) | (_, Err(e)) => {
                    err = Some(e);
                    0.0
                }
            }
        },
        &bps,
        QUADRATURE_TOL,
    );
    match err {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// `1 − α_C + Pr(τ > t)`.
pub fn list_level_bound(tail: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(invalid("alpha_C must lie in [0, 1]"));
    }
    Ok(tail.iter().map(|p| 1.0 - alpha + p).collect())
}

/// Empirical `Pr(τ > t)` for `t = 0..=t_max`. Censored runs count as not
/// yet met, which is exact as long as `t_max` is below the censoring horizon.
pub fn tail_curve(taus: &[Option<u64>], t_max: u64) -> Vec<f64> {
    let n = taus.len() as f64;
    (0..=t_max)
        .map(|t| taus.iter().filter(|tau| tau.is_none_or(|v| v > t)).count() as f64 / n)
        .collect()
}

/// Upper bounds on `‖π_t − π‖_TV` along a time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundCurve {
    pub t: Vec<u64>,
    pub tail: Vec<f64>,
    pub johnson: Option<Vec<f64>>,
    pub listlevel: Option<Vec<f64>>,
    /// Pointwise minimum of the available bounds (1 when neither is).
    pub combined: Vec<f64>,
}

impl BoundCurve {
    pub fn new(
        t: Vec<u64>,
        tail: Vec<f64>,
        johnson: Option<Vec<f64>>,
        listlevel: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = t.len();
        if tail.len() != n
            || johnson.as_ref().is_some_and(|v| v.len() != n)
            || listlevel.as_ref().is_some_and(|v| v.len() != n)
        {
            return Err(invalid("bound series lengths differ"));
        }
        if tail.windows(2).any(|w| w[1] > w[0]) {
            return Err(invalid("tail must be nonincreasing"));
        }
        let combined = (0..n)
            .map(|i| {
                let j = johnson.as_ref().map_or(f64::INFINITY, |v| v[i]);
                let l = listlevel.as_ref().map_or(f64::INFINITY, |v| v[i]);
                let m = j.min(l);
                if m.is_finite() {
                    m
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self {
            t,
            tail,
            johnson,
            listlevel,
            combined,
        })
    }

    /// Both bounds for the meeting tail of `C` chains started from `π₀`.
    pub fn from_tail(tail: Vec<f64>, omega: &Omega, alpha: f64, c: usize) -> Result<Self> {
        let t = (0..tail.len() as u64).collect();
        let j = johnson_bound(&tail, omega, c);
        let l = list_level_bound(&tail, alpha)?;
        Self::new(t, tail, j, Some(l))
    }

    /// Series clipped to `[0, 1]`, for plotting; raw values stay in `self`.
    pub fn clipped(&self) -> Self {
        let clip = |v: &Vec<f64>| v.iter().map(|x| x.clamp(0.0, 1.0)).collect::<Vec<_>>();
        Self {
            t: self.t.clone(),
            tail: clip(&self.tail),
            johnson: self.johnson.as_ref().map(clip),
            listlevel: self.listlevel.as_ref().map(clip),
            combined: clip(&self.combined),
        }
    }
}

/// A transition that moves a group of chains jointly.
///
/// Implementations must be faithful: chains in bitwise-equal states leave
/// in bitwise-equal states.
pub trait GroupKernel {
    fn step_group(&self, states: &[Vec<f64>], rng: &mut RngStream) -> Result<Vec<Vec<f64>>>;
}

impl GroupKernel for CoupledKernelSpec {
    fn step_group(&self, states: &[Vec<f64>], rng: &mut RngStream) -> Result<Vec<Vec<f64>>> {
        let mut ens = ChainEnsemble::new(self, states.to_vec())?;
        grand::step(&mut ens, self, rng)?;
        Ok(ens.states())
    }
}

/// AR(1) kernel `N(ρx, (1 − ρ²) I)` moved jointly through a multi-marginal
/// coupler. Equal states share one marginal, so any coupler is faithful.
#[derive(Clone, Debug)]
pub struct ArGroupKernel<K> {
    pub rho: f64,
    pub coupler: K,
}

impl<K: Coupler> GroupKernel for ArGroupKernel<K> {
    fn step_group(&self, states: &[Vec<f64>], rng: &mut RngStream) -> Result<Vec<Vec<f64>>> {
        let (labels, g) = partition_by(states, |a, b| slice_bit_cmp(a, b));
        let mut reps = vec![0usize; g];
        for (i, &l) in labels.iter().enumerate().rev() {
            reps[l] = i;
        }
        let marginals = reps
            .iter()
            .map(|&i| ar_kernel(&states[i], self.rho))
            .collect::<Result<Vec<_>>>()?;
        let draw = self.coupler.couple(&marginals, rng)?;
        let moved: Vec<Vec<f64>> = draw
            .values
            .into_iter()
            .map(|p| match p {
                Point::Vector(v) => Ok(v),
                Point::State(_) => Err(Error::SpaceMismatch("AR kernel is continuous".into())),
            })
            .collect::<Result<_>>()?;
        Ok(labels.iter().map(|&l| moved[l].clone()).collect())
    }
}

/// Steps a group kernel from `states` until all chains agree.
pub fn run_group_until_meet(
    kernel: &dyn GroupKernel,
    mut states: Vec<Vec<f64>>,
    max_iter: u64,
    rng: &mut RngStream,
) -> Result<Option<u64>> {
    let all_equal = |s: &[Vec<f64>]| s.windows(2).all(|w| slice_bit_cmp(&w[0], &w[1]).is_eq());
    for t in 0..max_iter {
        if all_equal(&states) {
            return Ok(Some(t));
        }
        states = kernel.step_group(&states, rng)?;
    }
    Ok(if all_equal(&states) {
        Some(max_iter)
    } else {
        None
    })
}

/// `κ(·|x) = N(ρx, (1 − ρ²) I)`.
pub fn ar_kernel(x: &[f64], rho: f64) -> Result<Measure> {
    check_rho(rho)?;
    Measure::gaussian(
        x.iter().map(|v| rho * v).collect(),
        vec![1.0 - rho * rho; x.len()],
    )
}

pub fn ar_kernel_step(x: &[f64], rho: f64, rng: &mut RngStream) -> Result<Vec<f64>> {
    Ok(ar_kernel(x, rho)?.sample_vec(rng))
}

/// Law at time `t` of the AR(1) chain started from `N(m₀ 1, v₀ I)`.
pub fn ar_marginal_from(m0: f64, v0: f64, t: u64, rho: f64, d: usize) -> Result<Measure> {
    check_rho(rho)?;
    let r2 = rho.powi(2).powf(t as f64);
    let mean = rho.powf(t as f64) * m0;
    Measure::gaussian(vec![mean; d], vec![r2 * v0 + 1.0 - r2; d])
}

/// `N(ρ^t 10·1, (1 + 4ρ^{2t}) I)`.
pub fn ar_marginal(t: u64, rho: f64, d: usize) -> Result<Measure> {
    ar_marginal_from(AR_INIT_MEAN, AR_INIT_VAR, t, rho, d)
}

/// Exact `‖π̂_t − N(0, 1)‖_TV` for the 1-D AR chain, by quadrature.
pub fn ar_tv_1d(t: u64, rho: f64) -> Result<f64> {
    let p = ar_marginal(t, rho, 1)?;
    let q = Measure::gaussian(vec![0.0], vec![1.0])?;
    Ok(hockey_stick(&p, &q, 1.0, HockeyScheme::Quadrature1d)?.value)
}

fn check_rho(rho: f64) -> Result<()> {
    if rho.abs() < 1.0 {
        Ok(())
    } else {
        Err(invalid("AR coefficient must satisfy |rho| < 1"))
    }
}

/// Squared Hellinger distance `1 − ∫√(pq)` between diagonal Gaussians.
pub fn hellinger_sq_gaussian(p: &GaussianDiag, q: &GaussianDiag) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: q.dim(),
        });
    }
    let mut log_bc = 0.0;
    for i in 0..p.dim() {
        let (a, b) = (p.var()[i], q.var()[i]);
        let delta = p.mean()[i] - q.mean()[i];
        log_bc += 0.5 * (2.0 * (a * b).sqrt() / (a + b)).ln() - delta * delta / (4.0 * (a + b));
    }
    Ok(-log_bc.exp_m1())
}

/// Chains with log-weights, split into equal-size groups.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedEnsemble {
    pub states: Vec<Vec<f64>>,
    pub log_weights: Vec<f64>,
    pub groups: Vec<Vec<usize>>,
}

impl WeightedEnsemble {
    /// Contiguous initial grouping `{0..m}, {m..2m}, …`.
    pub fn new(states: Vec<Vec<f64>>, log_weights: Vec<f64>, m: usize) -> Result<Self> {
        let n = states.len();
        if m == 0 || n == 0 || !n.is_multiple_of(m) {
            return Err(invalid(
                "number of chains must be a positive multiple of the group size",
            ));
        }
        if log_weights.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: log_weights.len(),
            });
        }
        if log_weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("log-weights"));
        }
        let groups = (0..n / m).map(|l| (l * m..(l + 1) * m).collect()).collect();
        Ok(Self {
            states,
            log_weights,
            groups,
        })
    }

    /// `N` draws from `π₀` with importance weights `π/π₀`.
    pub fn importance(
        pi0: &Measure,
        pi: &Measure,
        n: usize,
        m: usize,
        rng: &mut RngStream,
    ) -> Result<Self> {
        let mut states = Vec::with_capacity(n);
        let mut lw = Vec::with_capacity(n);
        for _ in 0..n {
            let x = pi0.sample_vec(rng);
            lw.push(pi.log_density_vec(&x) - pi0.log_density_vec(&x));
            states.push(x);
        }
        Self::new(states, lw, m)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn log_total_weight(&self) -> f64 {
        log_sum_exp(self.log_weights.iter().copied())
    }

    /// Squared Hellinger distance between the normalized weights and the
    /// uniform vector, `1 − N^{-1/2} Σ √p_i`.
    pub fn weight_hellinger(&self) -> f64 {
        let lz = self.log_total_weight();
        let n = self.len() as f64;
        let s: f64 = self
            .log_weights
            .iter()
            .map(|w| (0.5 * (w - lz)).exp())
            .sum();
        (1.0 - s / n.sqrt()).max(0.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HarmonizeReport {
    /// Groups with at least one cluster of size ≥ 2 after the move.
    pub coalesced_groups: Vec<usize>,
    pub reshuffled: bool,
}

/// One round of weight harmonization: move each group jointly, average
/// weights within every coalesced cluster, then reshuffle the members of
/// the coalesced groups among themselves when there are at least two.
pub fn harmonize_step(
    we: &mut WeightedEnsemble,
    kernel: &dyn GroupKernel,
    rng: &mut RngStream,
) -> Result<HarmonizeReport> {
    let mut coalesced = Vec::new();
    for (l, group) in we.groups.iter().enumerate() {
        let current: Vec<Vec<f64>> = group.iter().map(|&i| we.states[i].clone()).collect();
        let next = kernel.step_group(&current, rng)?;
        let (labels, g) = partition_by(&next, |a, b| slice_bit_cmp(a, b));
        if g < group.len() {
            coalesced.push(l);
            for cl in 0..g {
                let members: Vec<usize> = labels
                    .iter()
                    .enumerate()
                    .filter(|(_, &x)| x == cl)
                    .map(|(k, _)| group[k])
                    .collect();
                if members.len() >= 2 {
                    let avg = log_sum_exp(members.iter().map(|&i| we.log_weights[i]))
                        - (members.len() as f64).ln();
                    for &i in &members {
                        we.log_weights[i] = avg;
                    }
                }
            }
        }
        for (k, x) in next.into_iter().enumerate() {
            we.states[group[k]] = x;
        }
    }
    let reshuffled = coalesced.len() >= 2;
    if reshuffled {
        let mut pool: Vec<usize> = coalesced
            .iter()
            .flat_map(|&l| we.groups[l].iter().copied())
            .collect();
        pool.shuffle(rng);
        let m = we.groups[0].len();
        for (slot, &l) in coalesced.iter().enumerate() {
            we.groups[l] = pool[slot * m..(slot + 1) * m].to_vec();
        }
    }
    Ok(HarmonizeReport {
        coalesced_groups: coalesced,
        reshuffled,
    })
}
