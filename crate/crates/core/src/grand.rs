//! Grand couplings of `C` Metropolis–Hastings chains and meeting times.
//!
//! Chains are kept as equivalence classes of bitwise-equal states; every
//! kernel produces one update per class, so chains that have met stay
//! together by construction.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // float methods under no_std
use num_traits::Float;
use rand::Rng;

use crate::couplings::{maximal_pair_given, Law};
use crate::error::{invalid, Error, Result};
use crate::measures::{Measure, SampleSpace};
use crate::mh::{reverse_kernel, LiftedLaw, LiftedState, ProposalKernel};
use crate::point::slice_bit_cmp;
use crate::poisson::{pfr_select, MarkSource, MarkedPoissonProcess, DEFAULT_ATOM_CAP};
use crate::rng::RngStream;
use crate::special::{log1m_exp, log_sum_exp};

/// Default step cap for [`run_until_meet`].
pub const DEFAULT_MAX_ITER: u64 = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Poisson matching on the lifted proposal–acceptance laws.
    Pmc1Step,
    /// Poisson matching of proposals, then one shared accept uniform.
    Pmc2Step,
    /// Lifted-law maximal coupling of every class to the reference class.
    Star1Step,
    /// Proposal maximal coupling to the reference class, shared accept uniform.
    Star2Step,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Star2Step,
        Method::Star1Step,
        Method::Pmc2Step,
        Method::Pmc1Step,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Pmc1Step => "pmc-1step",
            Method::Pmc2Step => "pmc-2step",
            Method::Star1Step => "star-1step",
            Method::Star2Step => "star-2step",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }
}

/// Proposal measure of the 1-step Poisson kernel.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MixtureVariant {
    /// `μ = (1/C) Σ_i P'_i`.
    #[default]
    ExactAlpha,
    /// `μ = Ber(1/2) ⊗ (1/C) Σ_i k(·|x_i)`; ratios bounded by `2C`.
    BerHalf,
}

#[derive(Clone, Debug)]
pub struct CoupledKernelSpec {
    pub method: Method,
    pub target: Measure,
    pub proposal: ProposalKernel,
    /// Chain whose class anchors the star methods.
    pub reference_index: usize,
    pub variant: MixtureVariant,
}

impl CoupledKernelSpec {
    pub fn new(method: Method, target: Measure, proposal: ProposalKernel) -> Result<Self> {
        match target.space() {
            SampleSpace::Continuous(_) => {}
            SampleSpace::Discrete(_) => {
                return Err(Error::UnsupportedKind {
                    op: "grand coupling",
                    kind: target.kind(),
                })
            }
        }
        if matches!(proposal, ProposalKernel::Rmala { .. })
            && target
                .log_density_derivatives(&vec![0.0; target_dim(&target)])
                .is_none()
        {
            return Err(Error::UnsupportedKind {
                op: "rmala proposal",
                kind: target.kind(),
            });
        }
        Ok(Self {
            method,
            target,
            proposal,
            reference_index: 0,
            variant: MixtureVariant::ExactAlpha,
        })
    }
}

fn target_dim(m: &Measure) -> usize {
    match m.space() {
        SampleSpace::Continuous(d) | SampleSpace::Discrete(d) => d,
    }
}

#[derive(Clone, Debug)]
struct Class {
    state: LiftedState,
    /// Chain indices, ascending.
    members: Vec<usize>,
}

/// `C` chains grouped into classes of bitwise-equal states.
#[derive(Clone, Debug)]
pub struct ChainEnsemble {
    classes: Vec<Class>,
    c: usize,
    t: u64,
    met_at: Option<u64>,
}

impl ChainEnsemble {
    pub fn new(spec: &CoupledKernelSpec, states: Vec<Vec<f64>>) -> Result<Self> {
        if states.is_empty() {
            return Err(invalid("ensemble needs at least one chain"));
        }
        let c = states.len();
        let mut ens = Self {
            classes: Vec::new(),
            c,
            t: 0,
            met_at: None,
        };
        let pairs: Vec<(Vec<f64>, Vec<usize>)> = states
            .into_iter()
            .enumerate()
            .map(|(i, s)| (s, vec![i]))
            .collect();
        ens.classes = regroup(pairs, spec, |_| None)?;
        if ens.classes.len() == 1 {
            ens.met_at = Some(0);
        }
        Ok(ens)
    }

    pub fn len(&self) -> usize {
        self.c
    }

    pub fn is_empty(&self) -> bool {
        self.c == 0
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn met_at(&self) -> Option<u64> {
        self.met_at
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    /// State of every chain, by chain index.
    pub fn states(&self) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new(); self.c];
        for cl in &self.classes {
            for &i in &cl.members {
                out[i] = cl.state.x.clone();
            }
        }
        out
    }

    pub fn state_of(&self, chain: usize) -> &[f64] {
        &self
            .classes
            .iter()
            .find(|cl| cl.members.contains(&chain))
            .expect("chain index in range")
            .state
            .x
    }

    /// Class label per chain, numbered by smallest member.
    pub fn partition(&self) -> Vec<usize> {
        let mut out = vec![0; self.c];
        for (k, cl) in self.classes.iter().enumerate() {
            for &i in &cl.members {
                out[i] = k;
            }
        }
        out
    }

    fn reference_class(&self, chain: usize) -> usize {
        self.classes
            .iter()
            .position(|cl| cl.members.contains(&chain))
            .unwrap_or(0)
    }
}

/// Merge `(state, members)` pairs with bitwise-equal states into classes
/// ordered by smallest member. `known` may supply a ready `LiftedState`.
fn regroup<F>(
    pairs: Vec<(Vec<f64>, Vec<usize>)>,
    spec: &CoupledKernelSpec,
    mut known: F,
) -> Result<Vec<Class>>
where
    F: FnMut(usize) -> Option<LiftedState>,
{
    let mut idx: Vec<usize> = (0..pairs.len()).collect();
    idx.sort_by(|&a, &b| slice_bit_cmp(&pairs[a].0, &pairs[b].0));
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new(); // (representative pair, members)
    for &i in &idx {
        match groups.last_mut() {
            Some((rep, members)) if slice_bit_cmp(&pairs[*rep].0, &pairs[i].0).is_eq() => {
                members.extend(&pairs[i].1)
            }
            _ => groups.push((i, pairs[i].1.clone())),
        }
    }
    let mut classes = Vec::with_capacity(groups.len());
    for (rep, mut members) in groups {
        members.sort_unstable();
        let state = match known(rep) {
            Some(s) => s,
            None => LiftedState::new(&spec.target, &spec.proposal, pairs[rep].0.clone())?,
        };
        classes.push(Class { state, members });
    }
    classes.sort_by_key(|cl| cl.members[0]);
    Ok(classes)
}

/// New state per class: `None` keeps the current state.
type Moves = Vec<Option<Vec<f64>>>;

fn finish_step(ens: &mut ChainEnsemble, spec: &CoupledKernelSpec, moves: Moves) -> Result<()> {
    let old = core::mem::take(&mut ens.classes);
    let mut cached: Vec<Option<LiftedState>> = Vec::with_capacity(old.len());
    let mut pairs = Vec::with_capacity(old.len());
    for (cl, mv) in old.into_iter().zip(moves) {
        match mv {
            Some(x) => {
                pairs.push((x, cl.members));
                cached.push(None);
            }
            None => {
                pairs.push((cl.state.x.clone(), cl.members));
                cached.push(Some(cl.state));
            }
        }
    }
    ens.classes = regroup(pairs, spec, |i| cached[i].take())?;
    ens.t += 1;
    if ens.met_at.is_none() && ens.classes.len() == 1 {
        ens.met_at = Some(ens.t);
    }
    Ok(())
}

fn log_class_weights(ens: &ChainEnsemble) -> Vec<f64> {
    let c = ens.c as f64;
    ens.classes
        .iter()
        .map(|cl| (cl.members.len() as f64 / c).ln())
        .collect()
}

fn pick_class(lw: &[f64], rng: &mut RngStream) -> usize {
    let mut u: f64 = rng.random();
    for (k, l) in lw.iter().enumerate() {
        let w = l.exp();
        if u < w {
            return k;
        }
        u -= w;
    }
    lw.len() - 1
}

/// Atom of the lifted process: `(y, u)` with every class's lifted
/// log-density and `ln μ(y, u)` cached.
struct LiftedMark {
    y: Vec<f64>,
    u: bool,
    lifted: Vec<f64>,
    log_mu: f64,
}

struct LiftedMarks<'a> {
    classes: &'a [Class],
    lw: Vec<f64>,
    spec: &'a CoupledKernelSpec,
}

impl MarkSource for LiftedMarks<'_> {
    type Mark = LiftedMark;

    fn sample_mark(&self, rng: &mut RngStream) -> LiftedMark {
        let k = pick_class(&self.lw, rng);
        let y = self.classes[k].state.kernel.sample(rng);
        let lpy = self.spec.target.log_density_vec(&y);
        let rev = if lpy == f64::NEG_INFINITY {
            None
        } else {
            reverse_kernel(&self.spec.target, &self.spec.proposal, &y)
                .ok()
                .flatten()
        };
        let lk: Vec<f64> = self
            .classes
            .iter()
            .map(|cl| cl.state.kernel.log_density(&y))
            .collect();
        let la: Vec<f64> = self
            .classes
            .iter()
            .map(|cl| cl.state.log_alpha(&y, lpy, rev.as_ref()))
            .collect();
        let u = match self.spec.variant {
            MixtureVariant::ExactAlpha => {
                let num = log_sum_exp((0..lk.len()).map(|l| self.lw[l] + lk[l] + la[l]));
                let den = log_sum_exp((0..lk.len()).map(|l| self.lw[l] + lk[l]));
                rng.random::<f64>().ln() < num - den
            }
            MixtureVariant::BerHalf => rng.random::<bool>(),
        };
        let lifted: Vec<f64> = lk
            .iter()
            .zip(&la)
            .map(|(k, a)| k + if u { *a } else { log1m_exp(*a) })
            .collect();
        let log_mu = match self.spec.variant {
            MixtureVariant::ExactAlpha => {
                log_sum_exp(lifted.iter().zip(&self.lw).map(|(l, w)| l + w))
            }
            MixtureVariant::BerHalf => {
                -core::f64::consts::LN_2 + log_sum_exp(lk.iter().zip(&self.lw).map(|(l, w)| l + w))
            }
        };
        LiftedMark {
            y,
            u,
            lifted,
            log_mu,
        }
    }
}

/// One step of the 1-step Poisson-matching kernel.
pub fn step_pmc_1step(
    ens: &mut ChainEnsemble,
    spec: &CoupledKernelSpec,
    rng: &mut RngStream,
) -> Result<()> {
    let lw = log_class_weights(ens);
    let c = ens.c as f64;
    let factor = match spec.variant {
        MixtureVariant::ExactAlpha => 1.0,
        MixtureVariant::BerHalf => 0.5,
    };
    let moves = {
        let marks = LiftedMarks {
            classes: &ens.classes,
            lw,
            spec,
        };
        let mut proc = MarkedPoissonProcess::new(marks, rng.fork());
        let mut moves = Vec::with_capacity(ens.classes.len());
        for (k, cl) in ens.classes.iter().enumerate() {
            let w_min = factor * cl.members.len() as f64 / c;
            let sel = pfr_select(&mut proc, w_min, DEFAULT_ATOM_CAP, |_, m| {
                let l = m.lifted[k];
                if l == f64::NEG_INFINITY {
                    l
                } else {
                    l - m.log_mu
                }
            })?;
            let m = proc.mark(sel.atom_index);
            moves.push(if m.u { Some(m.y.clone()) } else { None });
        }
        moves
    };
    finish_step(ens, spec, moves)
}

struct ProposalMark {
    y: Vec<f64>,
    lk: Vec<f64>,
    log_mu: f64,
}

struct ProposalMarks<'a> {
    classes: &'a [Class],
    lw: Vec<f64>,
}

impl MarkSource for ProposalMarks<'_> {
    type Mark = ProposalMark;

    fn sample_mark(&self, rng: &mut RngStream) -> ProposalMark {
        let k = pick_class(&self.lw, rng);
        let y = self.classes[k].state.kernel.sample(rng);
        let lk: Vec<f64> = self
            .classes
            .iter()
            .map(|cl| cl.state.kernel.log_density(&y))
            .collect();
        let log_mu = log_sum_exp(lk.iter().zip(&self.lw).map(|(l, w)| l + w));
        ProposalMark { y, lk, log_mu }
    }
}

fn shared_accept(
    ens: &ChainEnsemble,
    spec: &CoupledKernelSpec,
    proposals: Vec<Vec<f64>>,
    rng: &mut RngStream,
) -> Result<Moves> {
    let lu = rng.random::<f64>().ln();
    ens.classes
        .iter()
        .zip(proposals)
        .map(|(cl, y)| {
            let lpy = spec.target.log_density_vec(&y);
            let rev = if lpy == f64::NEG_INFINITY {
                None
            } else {
                reverse_kernel(&spec.target, &spec.proposal, &y)?
            };
            Ok(if lu < cl.state.log_alpha(&y, lpy, rev.as_ref()) {
                Some(y)
            } else {
                None
            })
        })
        .collect()
}

/// One step of the 2-step Poisson-matching kernel.
pub fn step_pmc_2step(
    ens: &mut ChainEnsemble,
    spec: &CoupledKernelSpec,
    rng: &mut RngStream,
) -> Result<()> {
    let lw = log_class_weights(ens);
    let c = ens.c as f64;
    let proposals = {
        let marks = ProposalMarks {
            classes: &ens.classes,
            lw,
        };
        let mut proc = MarkedPoissonProcess::new(marks, rng.fork());
        let mut ys = Vec::with_capacity(ens.classes.len());
        for (k, cl) in ens.classes.iter().enumerate() {
            let w_min = cl.members.len() as f64 / c;
            let sel = pfr_select(&mut proc, w_min, DEFAULT_ATOM_CAP, |_, m| {
                let l = m.lk[k];
                if l == f64::NEG_INFINITY {
                    l
                } else {
                    l - m.log_mu
                }
            })?;
            ys.push(proc.mark(sel.atom_index).y.clone());
        }
        ys
    };
    let moves = shared_accept(ens, spec, proposals, rng)?;
    finish_step(ens, spec, moves)
}

/// One step of the 2-step star kernel.
pub fn step_star_2step(
    ens: &mut ChainEnsemble,
    spec: &CoupledKernelSpec,
    rng: &mut RngStream,
) -> Result<()> {
    let r = ens.reference_class(spec.reference_index);
    let kr = &ens.classes[r].state.kernel;
    let yr = kr.sample(rng);
    let lr = kr.log_density(&yr);
    let mut proposals = Vec::with_capacity(ens.classes.len());
    for (k, cl) in ens.classes.iter().enumerate() {
        if k == r {
            proposals.push(yr.clone());
        } else {
            proposals.push(maximal_pair_given(&yr, lr, kr, &cl.state.kernel, rng)?.0);
        }
    }
    let moves = shared_accept(ens, spec, proposals, rng)?;
    finish_step(ens, spec, moves)
}

/// One step of the 1-step star kernel.
pub fn step_star_1step(
    ens: &mut ChainEnsemble,
    spec: &CoupledKernelSpec,
    rng: &mut RngStream,
) -> Result<()> {
    let r = ens.reference_class(spec.reference_index);
    let law_r = LiftedLaw {
        state: &ens.classes[r].state,
        target: &spec.target,
        proposal: &spec.proposal,
    };
    let vr = law_r.draw(rng);
    let lr = law_r.log_density(&vr);
    let mut moves = Vec::with_capacity(ens.classes.len());
    for (k, cl) in ens.classes.iter().enumerate() {
        let v = if k == r {
            vr.clone()
        } else {
            let law = LiftedLaw {
                state: &cl.state,
                target: &spec.target,
                proposal: &spec.proposal,
            };
            maximal_pair_given(&vr, lr, &law_r, &law, rng)?.0
        };
        moves.push(if v.u { Some(v.y) } else { None });
    }
    finish_step(ens, spec, moves)
}

/// One coupled transition with the kernel named by `spec.method`.
pub fn step(ens: &mut ChainEnsemble, spec: &CoupledKernelSpec, rng: &mut RngStream) -> Result<()> {
    if ens.classes.len() == 1 {
        // a single class is an ordinary MH chain; all kernels reduce to it
        let law = LiftedLaw {
            state: &ens.classes[0].state,
            target: &spec.target,
            proposal: &spec.proposal,
        };
        let v = law.draw(rng);
        let moves = vec![if v.u { Some(v.y) } else { None }];
        return finish_step(ens, spec, moves);
    }
    match spec.method {
        Method::Pmc1Step => step_pmc_1step(ens, spec, rng),
        Method::Pmc2Step => step_pmc_2step(ens, spec, rng),
        Method::Star1Step => step_star_1step(ens, spec, rng),
        Method::Star2Step => step_star_2step(ens, spec, rng),
    }
}

/// Initial law of the chains.
#[derive(Clone, Debug)]
pub enum Initial {
    Draw(Measure),
    /// Every chain starts at this point.
    Fixed(Vec<f64>),
}

impl Initial {
    pub fn draw(&self, c: usize, rng: &mut RngStream) -> Vec<Vec<f64>> {
        match self {
            Initial::Draw(m) => (0..c).map(|_| m.sample_vec(rng)).collect(),
            Initial::Fixed(x) => vec![x.clone(); c],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Meeting {
    /// `None` when censored at `max_iter`.
    pub tau: Option<u64>,
    pub steps: u64,
    /// Number of classes after each step (index 0 is the initial count).
    pub trace: Option<Vec<usize>>,
}

/// Run the coupled chains from i.i.d. initial draws until all `C` meet.
pub fn run_until_meet(
    spec: &CoupledKernelSpec,
    init: &Initial,
    c: usize,
    max_iter: u64,
    trace: bool,
    rng: &mut RngStream,
) -> Result<Meeting> {
    if max_iter == 0 {
        return Err(invalid("max_iter must be >= 1"));
    }
    if c == 0 {
        return Err(invalid("need at least one chain"));
    }
    let states = init.draw(c, rng);
    let mut ens = ChainEnsemble::new(spec, states)?;
    let mut tr = if trace {
        Some(vec![ens.n_classes()])
    } else {
        None
    };
    while ens.met_at.is_none() && ens.t < max_iter {
        step(&mut ens, spec, rng)?;
        if let Some(v) = tr.as_mut() {
            v.push(ens.n_classes());
        }
    }
    Ok(Meeting {
        tau: ens.met_at,
        steps: ens.t,
        trace: tr,
    })
}

/// Aggregate meeting statistics over replicates (censored runs excluded
/// from mean and SE).
#[derive(Clone, Debug, PartialEq)]
pub struct MeetingSummary {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
    pub censored: usize,
}

impl MeetingSummary {
    pub fn from_outcomes(taus: &[Option<u64>]) -> Self {
        let done: Vec<f64> = taus.iter().filter_map(|t| t.map(|v| v as f64)).collect();
        let (mean, se) = crate::stats::mean_se(&done);
        Self {
            mean,
            se,
            n: taus.len(),
            censored: taus.len() - done.len(),
        }
    }

    pub fn censor_rate(&self) -> f64 {
        self.censored as f64 / self.n as f64
    }
}

/// One cell of a meeting-time grid.
#[derive(Clone, Debug)]
pub struct MeetingCell {
    pub spec: CoupledKernelSpec,
    pub init: Initial,
    pub c: usize,
}

/// Meeting-time summaries per cell; replicate `r` of cell `i` uses
/// `RngStream::derive(seed, i, r)`.
pub fn estimate_meeting_curve(
    cells: &[MeetingCell],
    n_reps: usize,
    max_iter: u64,
    seed: u64,
) -> Result<Vec<MeetingSummary>> {
    cells
        .iter()
        .enumerate()
        .map(|(i, cell)| {
            let taus = (0..n_reps)
                .map(|r| {
                    let mut rng = RngStream::derive(seed, i as u64, r as u64);
                    run_until_meet(&cell.spec, &cell.init, cell.c, max_iter, false, &mut rng)
                        .map(|m| m.tau)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(MeetingSummary::from_outcomes(&taus))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mh::default_rw_scale;

    fn gauss_spec(method: Method, d: usize) -> CoupledKernelSpec {
        let target = Measure::gaussian(vec![0.0; d], vec![1.0; d]).unwrap();
        CoupledKernelSpec::new(
            method,
            target,
            ProposalKernel::rw_gaussian(default_rw_scale(d)).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn trivial_meeting_times() {
        for m in Method::ALL {
            let spec = gauss_spec(m, 2);
            let init = Initial::Draw(Measure::gaussian(vec![1.0; 2], vec![16.0; 2]).unwrap());
            let mut rng = RngStream::new(1);
            assert_eq!(
                run_until_meet(&spec, &init, 1, 10, false, &mut rng)
                    .unwrap()
                    .tau,
                Some(0)
            );
            let fixed = Initial::Fixed(vec![0.5, 0.5]);
            assert_eq!(
                run_until_meet(&spec, &fixed, 8, 10, false, &mut rng)
                    .unwrap()
                    .tau,
                Some(0)
            );
        }
    }

    #[test]
    fn all_methods_meet_and_stay_faithful() {
        for m in Method::ALL {
            let spec = gauss_spec(m, 1);
            let mut rng = RngStream::new(42);
            let init = Initial::Draw(Measure::gaussian(vec![1.0], vec![16.0]).unwrap());
            let states = init.draw(6, &mut rng);
            let mut ens = ChainEnsemble::new(&spec, states).unwrap();
            let mut prev = ens.partition();
            for _ in 0..300 {
                step(&mut ens, &spec, &mut rng).unwrap();
                let part = ens.partition();
                let xs = ens.states();
                for i in 0..6 {
                    for j in 0..6 {
                        if prev[i] == prev[j] {
                            assert_eq!(part[i], part[j], "{}", m.name());
                        }
                        assert_eq!(part[i] == part[j], xs[i][0].to_bits() == xs[j][0].to_bits());
                    }
                }
                prev = part;
            }
            assert_eq!(ens.n_classes(), 1, "{} did not meet", m.name());
            assert!(ens.met_at().is_some());
        }
    }

    #[test]
    fn deterministic_under_seed() {
        for m in Method::ALL {
            let spec = gauss_spec(m, 2);
            let init = Initial::Draw(Measure::gaussian(vec![1.0; 2], vec![16.0; 2]).unwrap());
            let a = run_until_meet(&spec, &init, 5, 10_000, true, &mut RngStream::new(9)).unwrap();
            let b = run_until_meet(&spec, &init, 5, 10_000, true, &mut RngStream::new(9)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn censoring() {
        let spec = gauss_spec(Method::Star2Step, 8);
        let init = Initial::Draw(Measure::gaussian(vec![1.0; 8], vec![16.0; 8]).unwrap());
        let out = run_until_meet(&spec, &init, 16, 2, false, &mut RngStream::new(3)).unwrap();
        assert_eq!(out.tau, None);
        assert_eq!(out.steps, 2);
        let s = MeetingSummary::from_outcomes(&[Some(4), None, Some(6)]);
        assert_eq!((s.mean, s.censored, s.n), (5.0, 1, 3));
    }
}
