use grandcouple_core::couplings::{Anchor, Star};
use grandcouple_core::diagnostics::{
    alpha_c_quadrature_1d, ar_marginal, ar_tv_1d, estimate_alpha_c, harmonize_step,
    johnson_denominator, omega, run_group_until_meet, tail_curve, ArGroupKernel, BoundCurve,
    GroupKernel, WeightedEnsemble,
};
use grandcouple_core::poisson::SharedPoisson;
use grandcouple_core::{Measure, RngStream};
use proptest::prelude::*;

const RHO: f64 = 0.9;

fn target(d: usize) -> Measure {
    Measure::gaussian(vec![0.0; d], vec![1.0; d]).unwrap()
}

/// Coupled AR(1) chains from `π₀ = N(10, 5)`: the combined bound must sit
/// above the exact TV of a single chain at every `t`, up to the sampling
/// error of the estimated tail.
#[test]
fn bounds_dominate_exact_tv() {
    let (c, reps, horizon) = (8usize, 400usize, 80u64);
    let pi0 = ar_marginal(0, RHO, 1).unwrap();
    let pi = target(1);
    let om = omega(&pi0, &pi).unwrap();
    let den = johnson_denominator(om.value, c);
    let alpha = alpha_c_quadrature_1d(&pi0, &pi, c).unwrap();
    let tv: Vec<f64> = (0..=horizon).map(|t| ar_tv_1d(t, RHO).unwrap()).collect();
    let kernel = ArGroupKernel {
        rho: RHO,
        coupler: SharedPoisson,
    };
    for seed in 0..20u64 {
        let taus: Vec<Option<u64>> = (0..reps)
            .map(|r| {
                let mut rng = RngStream::derive(seed, 0, r as u64);
                let init = (0..c).map(|_| pi0.sample_vec(&mut rng)).collect();
                run_group_until_meet(&kernel, init, 10_000, &mut rng).unwrap()
            })
            .collect();
        let tail = tail_curve(&taus, horizon);
        let curve = BoundCurve::from_tail(tail.clone(), &om, alpha, c).unwrap();
        for t in 0..=horizon as usize {
            // Upper confidence slack on the tail, with a rule-of-three floor
            // for empty counts; it is scaled by each bound's denominator.
            let slack = 3.0 * (tail[t] * (1.0 - tail[t]) / reps as f64).sqrt() + 3.0 / reps as f64;
            let j = curve
                .johnson
                .as_ref()
                .map_or(f64::INFINITY, |v| v[t] + slack / den);
            let l = curve.listlevel.as_ref().unwrap()[t] + slack;
            let bound = j.min(l);
            assert!(
                bound >= tv[t],
                "seed {seed} t {t}: bound {bound} < tv {}",
                tv[t]
            );
        }
    }
}

#[test]
fn alpha_monte_carlo_within_three_se_of_quadrature() {
    let pi0 = ar_marginal(0, RHO, 1).unwrap();
    let pi = target(1);
    for (i, c) in [2usize, 8, 32].into_iter().enumerate() {
        let exact = alpha_c_quadrature_1d(&pi0, &pi, c).unwrap();
        let e =
            estimate_alpha_c(&pi0, &pi, c, 100_000, &mut RngStream::new(40 + i as u64)).unwrap();
        assert!(
            (e.value - exact).abs() <= 3.0 * e.se,
            "C={c}: {} ± {} vs {exact}",
            e.value,
            e.se
        );
    }
}

fn ensemble(n_groups: usize, m: usize, d: usize, seed: u64) -> WeightedEnsemble {
    let pi0 = ar_marginal(0, RHO, d).unwrap();
    WeightedEnsemble::importance(&pi0, &target(d), n_groups * m, m, &mut RngStream::new(seed))
        .unwrap()
}

/// Collapses any group holding a marked (very negative) state onto one
/// point and leaves every other group in place.
struct CollapseMarked;

impl GroupKernel for CollapseMarked {
    fn step_group(
        &self,
        states: &[Vec<f64>],
        _: &mut RngStream,
    ) -> grandcouple_core::Result<Vec<Vec<f64>>> {
        Ok(if states.iter().any(|s| s[0] < -1e9) {
            vec![vec![0.5]; states.len()]
        } else {
            states.to_vec()
        })
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn weight_is_conserved(n_groups in 1usize..6, m in 1usize..5, seed in any::<u64>(), steps in 1usize..20) {
        let mut we = ensemble(n_groups, m, 2, seed);
        let lz = we.log_total_weight();
        let mut rng = RngStream::new(seed ^ 1);
        let k = ArGroupKernel { rho: 0.5, coupler: SharedPoisson };
        for _ in 0..steps {
            harmonize_step(&mut we, &k, &mut rng).unwrap();
            let mut all: Vec<usize> = we.groups.concat();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n_groups * m).collect::<Vec<_>>());
            prop_assert!(we.groups.iter().all(|g| g.len() == m));
        }
        prop_assert!(((we.log_total_weight() - lz).exp() - 1.0).abs() < 1e-9);
    }

    /// Equal states carry equal weights after every round.
    #[test]
    fn coalesced_chains_share_weight(seed in any::<u64>()) {
        let mut we = ensemble(4, 3, 1, seed);
        let mut rng = RngStream::new(seed ^ 2);
        let k = ArGroupKernel { rho: 0.3, coupler: Star(Anchor::Random) };
        for _ in 0..10 {
            harmonize_step(&mut we, &k, &mut rng).unwrap();
            for i in 0..we.len() {
                for j in 0..we.len() {
                    if we.states[i] == we.states[j] && we.groups.iter().any(|g| g.contains(&i) && g.contains(&j)) {
                        prop_assert!((we.log_weights[i] - we.log_weights[j]).abs() < 1e-12);
                    }
                }
            }
        }
    }

    /// A single coalesced group never triggers a reshuffle.
    #[test]
    fn lone_coalescence_keeps_grouping(n_groups in 2usize..6, m in 2usize..5, seed in any::<u64>()) {
        let mut we = ensemble(n_groups, m, 1, seed);
        for i in 0..m {
            we.states[i] = vec![-1e10 - i as f64];
        }
        let before = we.groups.clone();
        let r = harmonize_step(&mut we, &CollapseMarked, &mut RngStream::new(seed)).unwrap();
        prop_assert_eq!(r.coalesced_groups, vec![0]);
        prop_assert!(!r.reshuffled);
        prop_assert_eq!(&we.groups, &before);
    }
}
