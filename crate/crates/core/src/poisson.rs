//! Marked Poisson processes as shared randomness, Poisson functional
//! representation (PFR) sampling, and multi-marginal Poisson matching with
//! the mixture-barycenter proposal.
//!
//! Every party that scans the same process with its own density ratio gets
//! an exact sample from its own target; parties whose ratios favour the
//! same atom end up with bitwise-identical values.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // float methods under no_std
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::couplings::Coupler;
use crate::error::{invalid, Error, Result};
use crate::measures::{Measure, Mixture, SampleSpace};
use crate::point::{CouplingDraw, Point};
use crate::rng::RngStream;
use crate::special::log_sum_exp;

/// Slack on `dP/dμ ≤ 1/w_min`, in log units.
pub const BOUND_TOL: f64 = 1e-9;

/// Default cap on atoms scanned by one PFR selection.
pub const DEFAULT_ATOM_CAP: u64 = 100_000_000;

/// Law of the marks of a Poisson process.
pub trait MarkSource {
    type Mark;
    fn sample_mark(&self, rng: &mut RngStream) -> Self::Mark;
}

impl MarkSource for Measure {
    type Mark = Point;
    fn sample_mark(&self, rng: &mut RngStream) -> Point {
        self.sample(rng)
    }
}

/// Unit-rate Poisson process on `R₊` with i.i.d. marks, materialized lazily
/// and append-only.
#[derive(Clone, Debug)]
pub struct MarkedPoissonProcess<S: MarkSource> {
    source: S,
    arrivals: Vec<f64>,
    marks: Vec<S::Mark>,
    rng: RngStream,
}

impl<S: MarkSource> MarkedPoissonProcess<S> {
    pub fn new(source: S, rng: RngStream) -> Self {
        Self {
            source,
            arrivals: Vec::new(),
            marks: Vec::new(),
            rng,
        }
    }

    pub fn source(&self) -> &S {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.arrivals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrivals.is_empty()
    }

    /// Ensure at least `j` atoms exist.
    pub fn extend_to(&mut self, j: usize) {
        while self.arrivals.len() < j {
            let e: f64 = Exp1.sample(&mut self.rng);
            let last = self.arrivals.last().copied().unwrap_or(0.0);
            self.arrivals.push(last + e);
            let m = self.source.sample_mark(&mut self.rng);
            self.marks.push(m);
        }
    }

    pub fn arrival(&self, i: usize) -> f64 {
        self.arrivals[i]
    }

    pub fn mark(&self, i: usize) -> &S::Mark {
        &self.marks[i]
    }

    pub fn arrivals(&self) -> &[f64] {
        &self.arrivals
    }
}

/// Outcome of one PFR scan (indices are zero-based).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PfrSelection {
    pub atom_index: usize,
    /// `S_J (dP/dμ(X_J))⁻¹`.
    pub score: f64,
    pub atoms_examined: usize,
}

/// Scan atoms in order for `argmin_j S_j / r(X_j)` where
/// `log_ratio(j) = ln r(X_j) = ln dP/dμ(X_j)`; stop once the running
/// minimum is at most `S_j · w_min`.
///
/// Errors with [`Error::InvalidBound`] if some atom has `r > 1/w_min`.
pub fn pfr_select<S, F>(
    proc: &mut MarkedPoissonProcess<S>,
    w_min: f64,
    atom_cap: u64,
    mut log_ratio: F,
) -> Result<PfrSelection>
where
    S: MarkSource,
    F: FnMut(usize, &S::Mark) -> f64,
{
    if !(w_min > 0.0 && w_min <= 1.0) {
        return Err(invalid("w_min must lie in (0, 1]"));
    }
    let lw = w_min.ln();
    let mut best = f64::INFINITY;
    let mut best_j = 0;
    let mut j = 0;
    loop {
        if j as u64 >= atom_cap {
            return Err(Error::IterationCap {
                context: "pfr scan",
                cap: atom_cap,
            });
        }
        proc.extend_to(j + 1);
        let ls = proc.arrival(j).ln();
        let lr = log_ratio(j, proc.mark(j));
        if lr > -lw + BOUND_TOL {
            return Err(Error::InvalidBound {
                ratio: lr.exp(),
                bound: 1.0 / w_min,
            });
        }
        let score = ls - lr;
        if score < best {
            best = score;
            best_j = j;
        }
        if best <= ls + lw {
            return Ok(PfrSelection {
                atom_index: best_j,
                score: best.exp(),
                atoms_examined: j + 1,
            });
        }
        j += 1;
    }
}

/// PFR sample of `target` from a process with base measure `μ`, using the
/// ratio `d target / dμ` evaluated from the two densities.
pub fn pfr_sample(
    proc: &mut MarkedPoissonProcess<Measure>,
    target: &Measure,
    w_min: f64,
) -> Result<(Point, PfrSelection)> {
    if target.space() != proc.source().space() {
        return Err(Error::SpaceMismatch(
            "target and base measure differ in space".into(),
        ));
    }
    let base = proc.source().clone();
    let sel = pfr_select(proc, w_min, DEFAULT_ATOM_CAP, |_, x| {
        let lt = target.log_density(x).unwrap_or(f64::NEG_INFINITY);
        if lt == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        lt - base.log_density(x).unwrap_or(f64::NEG_INFINITY)
    })?;
    Ok((proc.mark(sel.atom_index).clone(), sel))
}

/// Atom of a barycenter process, with every component's log-density cached.
#[derive(Clone, Debug)]
pub struct BarycenterMark {
    pub point: Point,
    pub component_log_densities: Vec<f64>,
    /// `ln μ(point)`.
    pub log_mu: f64,
}

/// Marks drawn from `μ = Σ_i w_i P^i`, evaluating all components per atom
/// (the batched evaluation the shared scans then reuse).
#[derive(Clone, Debug)]
pub struct BarycenterMarks {
    mixture: Mixture,
}

impl BarycenterMarks {
    pub fn new(targets: &[Measure]) -> Result<Self> {
        match crate::measures::barycenter(targets, None)? {
            Measure::Mixture(m) => Ok(Self { mixture: m }),
            _ => unreachable!(),
        }
    }

    pub fn mixture(&self) -> &Mixture {
        &self.mixture
    }
}

impl MarkSource for BarycenterMarks {
    type Mark = BarycenterMark;

    fn sample_mark(&self, rng: &mut RngStream) -> BarycenterMark {
        let comps = self.mixture.components();
        let k = self.mixture.pick(rng);
        let point = comps[k].sample(rng);
        let lds: Vec<f64> = match &point {
            Point::State(s) => comps.iter().map(|c| c.log_density_state(*s)).collect(),
            Point::Vector(v) => comps.iter().map(|c| c.log_density_vec(v)).collect(),
        };
        let log_mu = log_sum_exp(
            lds.iter()
                .zip(self.mixture.log_weights())
                .map(|(l, w)| l + w),
        );
        BarycenterMark {
            point,
            component_log_densities: lds,
            log_mu,
        }
    }
}

/// Per-target details of one shared-process matching.
#[derive(Clone, Debug)]
pub struct SharedMatch {
    pub draw: CouplingDraw,
    pub selections: Vec<PfrSelection>,
    /// Atoms materialized in the shared process.
    pub atoms_generated: usize,
}

/// Poisson matching of `targets` on one process with base
/// `μ = (1/C) Σ P^i`; every scan uses `w_min = 1/C`.
pub fn shared_match_detailed(targets: &[Measure], rng: &mut RngStream) -> Result<SharedMatch> {
    let marks = BarycenterMarks::new(targets)?;
    let c = targets.len();
    let w_min = 1.0 / c as f64;
    let mut proc = MarkedPoissonProcess::new(marks, rng.fork());
    let mut selections = Vec::with_capacity(c);
    for i in 0..c {
        let sel = pfr_select(&mut proc, w_min, DEFAULT_ATOM_CAP, |_, m| {
            let l = m.component_log_densities[i];
            if l == f64::NEG_INFINITY {
                l
            } else {
                l - m.log_mu
            }
        })?;
        selections.push(sel);
    }
    let values = selections
        .iter()
        .map(|s| proc.mark(s.atom_index).point.clone())
        .collect();
    Ok(SharedMatch {
        draw: CouplingDraw::from_values(values),
        selections,
        atoms_generated: proc.len(),
    })
}

/// Poisson matching of `targets` through one shared process.
pub fn shared_match(targets: &[Measure], rng: &mut RngStream) -> Result<CouplingDraw> {
    shared_match_detailed(targets, rng).map(|s| s.draw)
}

/// The shared-process coupler as a [`Coupler`].
#[derive(Clone, Copy, Debug, Default)]
pub struct SharedPoisson;

impl Coupler for SharedPoisson {
    fn name(&self) -> alloc::string::String {
        "poisson".into()
    }
    fn couple(&self, marginals: &[Measure], rng: &mut RngStream) -> Result<CouplingDraw> {
        shared_match(marginals, rng)
    }
}

/// `w_min = 1 / sup_x N(x; m, I)/N(x; c, s² I)` for `s² > 1`:
/// the supremum is `s^d exp(‖m − c‖² / (2(s² − 1)))`.
pub fn single_gaussian_log_sup_ratio(target_mean: &[f64], center: &[f64], s2: f64) -> Result<f64> {
    if target_mean.len() != center.len() {
        return Err(Error::DimensionMismatch {
            expected: center.len(),
            got: target_mean.len(),
        });
    }
    let d = center.len() as f64;
    let dist2: f64 = target_mean
        .iter()
        .zip(center)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    if s2 > 1.0 {
        Ok(0.5 * d * s2.ln() + dist2 / (2.0 * (s2 - 1.0)))
    } else if s2 == 1.0 && dist2 == 0.0 {
        Ok(0.0)
    } else {
        Err(invalid(
            "proposal does not dominate the target (need s² > 1)",
        ))
    }
}

/// Proposal used by the runtime comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProbeProposal {
    Barycenter,
    /// `N(mean of target means, C·I_d)`.
    SingleGaussian,
}

/// Cost of one coupling call: atoms scanned per target.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeCost {
    pub atoms_examined: Vec<usize>,
    pub atoms_generated: usize,
}

impl ProbeCost {
    pub fn mean_atoms(&self) -> f64 {
        self.atoms_examined.iter().sum::<usize>() as f64 / self.atoms_examined.len() as f64
    }
}

/// One replicate of the runtime probe on unit-variance Gaussian targets.
///
/// Barycenter: one [`shared_match`]. Single Gaussian: an independent PFR
/// scan per target, each with its own exact `w_min`.
pub fn probe_once(
    targets: &[Measure],
    proposal: ProbeProposal,
    atom_cap: u64,
    rng: &mut RngStream,
) -> Result<ProbeCost> {
    match proposal {
        ProbeProposal::Barycenter => {
            let marks = BarycenterMarks::new(targets)?;
            let c = targets.len();
            let mut proc = MarkedPoissonProcess::new(marks, rng.fork());
            let mut examined = Vec::with_capacity(c);
            for i in 0..c {
                let sel = pfr_select(&mut proc, 1.0 / c as f64, atom_cap, |_, m| {
                    m.component_log_densities[i] - m.log_mu
                })?;
                examined.push(sel.atoms_examined);
            }
            Ok(ProbeCost {
                atoms_examined: examined,
                atoms_generated: proc.len(),
            })
        }
        ProbeProposal::SingleGaussian => {
            let means: Vec<&[f64]> = targets
                .iter()
                .map(|t| match t {
                    Measure::GaussianDiag(g) if g.var().iter().all(|&v| v == 1.0) => Ok(g.mean()),
                    other => Err(Error::UnsupportedKind {
                        op: "single-gaussian probe",
                        kind: other.kind(),
                    }),
                })
                .collect::<Result<_>>()?;
            let c = targets.len();
            let d = means[0].len();
            let mut center = vec![0.0; d];
            for m in &means {
                for (a, b) in center.iter_mut().zip(m.iter()) {
                    *a += b / c as f64;
                }
            }
            let s2 = c as f64;
            let base = Measure::gaussian(center.clone(), vec![s2; d])?;
            let mut examined = Vec::with_capacity(c);
            let mut generated = 0;
            for (t, m) in targets.iter().zip(&means) {
                let w_min = (-single_gaussian_log_sup_ratio(m, &center, s2)?).exp();
                let mut proc = MarkedPoissonProcess::new(base.clone(), rng.fork());
                let sel = pfr_select(&mut proc, w_min.min(1.0), atom_cap, |_, x| {
                    let v = x.as_slice().expect("continuous");
                    t.log_density_vec(v) - base.log_density_vec(v)
                })?;
                examined.push(sel.atoms_examined);
                generated += proc.len();
            }
            Ok(ProbeCost {
                atoms_examined: examined,
                atoms_generated: generated,
            })
        }
    }
}

/// `C` unit-variance Gaussian targets in dimension `d` with means drawn
/// i.i.d. from `N(0, I_d)`.
pub fn gaussian_probe_family(c: usize, d: usize, rng: &mut RngStream) -> Result<Vec<Measure>> {
    if c == 0 || d == 0 {
        return Err(invalid("need C >= 1 and d >= 1"));
    }
    (0..c)
        .map(|_| {
            let mean: Vec<f64> = (0..d)
                .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
                .collect();
            Measure::gaussian(mean, vec![1.0; d])
        })
        .collect()
}

/// Checks that the targets share one space (for callers that want an early error).
pub fn common_space(targets: &[Measure]) -> Result<SampleSpace> {
    let s = targets
        .first()
        .ok_or_else(|| invalid("no targets"))?
        .space();
    if targets.iter().any(|t| t.space() != s) {
        return Err(Error::SpaceMismatch("targets on different spaces".into()));
    }
    Ok(s)
}
