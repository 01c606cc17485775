//! Grand couplings: each chain must move by its own MH kernel, and chains
//! that have met must stay together.

mod common;

use common::{ks2_p, LEVEL};
use grandcouple_core::grand::{
    run_until_meet, step, ChainEnsemble, CoupledKernelSpec, Initial, Method, MixtureVariant,
};
use grandcouple_core::mh::{mh_step, LiftedState, ProposalKernel};
use grandcouple_core::{Measure, RngStream};
use proptest::prelude::*;
use rand::Rng;

fn spec(method: Method, target: Measure, proposal: ProposalKernel) -> CoupledKernelSpec {
    CoupledKernelSpec::new(method, target, proposal).unwrap()
}

/// Per-chain one-step law of the coupled kernel against independent MH
/// steps from the same state, coordinate `k`.
fn check_one_step(spec: &CoupledKernelSpec, starts: &[Vec<f64>], k: usize, n: usize, seed: u64) {
    let mut rng = RngStream::derive(seed, 0, 0);
    let mut coupled = vec![Vec::with_capacity(n); starts.len()];
    for _ in 0..n {
        let mut ens = ChainEnsemble::new(spec, starts.to_vec()).unwrap();
        step(&mut ens, spec, &mut rng).unwrap();
        for (i, s) in ens.states().iter().enumerate() {
            coupled[i].push(s[k]);
        }
    }
    let mut rng = RngStream::derive(seed, 1, 0);
    for (i, x) in starts.iter().enumerate() {
        let st = LiftedState::new(&spec.target, &spec.proposal, x.clone()).unwrap();
        let solo: Vec<f64> = (0..n)
            .map(|_| {
                mh_step(&st, &spec.target, &spec.proposal, &mut rng)
                    .unwrap()
                    .x[k]
            })
            .collect();
        let p = ks2_p(&coupled[i], &solo);
        assert!(p > LEVEL, "{} chain {i}: p = {p}", spec.method.name());
    }
}

#[test]
fn gaussian_rw_marginals() {
    let target = Measure::gaussian(vec![0.0], vec![1.0]).unwrap();
    let starts = vec![vec![-1.0], vec![0.4], vec![2.0]];
    for m in Method::ALL {
        let s = spec(m, target.clone(), ProposalKernel::rw_gaussian(1.2).unwrap());
        check_one_step(&s, &starts, 0, 6000, 31);
    }
}

#[test]
fn student_t_rw_marginals() {
    let target = Measure::student_t(vec![0.0, 0.0], 1.0, 1.0).unwrap();
    let starts = vec![vec![-1.0, 3.0], vec![0.5, 0.0], vec![4.0, -2.0]];
    for m in Method::ALL {
        let s = spec(
            m,
            target.clone(),
            ProposalKernel::rw_student_t(1.0, 2.0).unwrap(),
        );
        check_one_step(&s, &starts, 1, 4000, 32);
    }
}

#[test]
fn rmala_banana_marginals() {
    let target = Measure::banana(2.0, 1.0, 0.05).unwrap();
    let starts = vec![vec![0.0, 0.0], vec![1.5, -0.5], vec![-2.0, 1.0]];
    for m in Method::ALL {
        let s = spec(m, target.clone(), ProposalKernel::rmala(0.4).unwrap());
        check_one_step(&s, &starts, 0, 3000, 33);
    }
}

#[test]
fn ber_half_variant_marginals() {
    let target = Measure::gaussian(vec![0.0], vec![1.0]).unwrap();
    let mut s = spec(
        Method::Pmc1Step,
        target,
        ProposalKernel::rw_gaussian(1.0).unwrap(),
    );
    s.variant = MixtureVariant::BerHalf;
    check_one_step(&s, &[vec![-0.5], vec![1.5]], 0, 6000, 34);
}

#[test]
fn single_chain_meets_immediately() {
    let target = Measure::gaussian(vec![0.0; 3], vec![1.0; 3]).unwrap();
    let init = Initial::Draw(Measure::gaussian(vec![1.0; 3], vec![16.0; 3]).unwrap());
    let mut rng = RngStream::new(1);
    for m in Method::ALL {
        let s = spec(m, target.clone(), ProposalKernel::rw_gaussian(1.0).unwrap());
        let r = run_until_meet(&s, &init, 1, 10, false, &mut rng).unwrap();
        assert_eq!(r.tau, Some(0));
    }
}

#[test]
fn meeting_is_seed_deterministic() {
    let target = Measure::gaussian(vec![0.0; 2], vec![1.0; 2]).unwrap();
    let init = Initial::Draw(Measure::gaussian(vec![1.0; 2], vec![16.0; 2]).unwrap());
    for m in Method::ALL {
        let s = spec(m, target.clone(), ProposalKernel::rw_gaussian(1.7).unwrap());
        let a =
            run_until_meet(&s, &init, 6, 10_000, true, &mut RngStream::derive(9, 1, 2)).unwrap();
        let b =
            run_until_meet(&s, &init, 6, 10_000, true, &mut RngStream::derive(9, 1, 2)).unwrap();
        assert_eq!(a, b);
    }
}

fn method() -> impl Strategy<Value = Method> {
    prop::sample::select(Method::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Chains sharing a state keep sharing it, and the class count never grows.
    #[test]
    fn faithful(m in method(), labels in prop::collection::vec(0usize..4, 2..8), seed in any::<u64>()) {
        let target = Measure::gaussian(vec![0.0; 2], vec![1.0; 2]).unwrap();
        let s = spec(m, target, ProposalKernel::rw_gaussian(1.0).unwrap());
        let mut rng = RngStream::new(seed);
        let seeds: Vec<Vec<f64>> = (0..4).map(|_| vec![rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)]).collect();
        let starts: Vec<Vec<f64>> = labels.iter().map(|&l| seeds[l].clone()).collect();
        let mut ens = ChainEnsemble::new(&s, starts).unwrap();
        let mut prev = ens.partition();
        let mut classes = ens.n_classes();
        for _ in 0..25 {
            step(&mut ens, &s, &mut rng).unwrap();
            let now = ens.partition();
            for i in 0..now.len() {
                for j in 0..now.len() {
                    if prev[i] == prev[j] {
                        prop_assert_eq!(now[i], now[j]);
                        prop_assert_eq!(ens.state_of(i), ens.state_of(j));
                    }
                }
            }
            prop_assert!(ens.n_classes() <= classes);
            classes = ens.n_classes();
            prev = now;
        }
    }
}
