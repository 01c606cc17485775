use grandcouple_core::bounds::{
    lower_bound_g, lp_optimal_g, tv_matrix, upper_bound_g, LowerBoundMode,
};
use grandcouple_core::couplings::{estimate_expected_g, GreedyList, Ordering};
use grandcouple_core::measures::tv_finite;
use grandcouple_core::poisson::SharedPoisson;
use grandcouple_core::{Measure, RngStream};
use proptest::prelude::*;

fn finite_measure(k: usize) -> impl Strategy<Value = Measure> {
    prop::collection::vec(0u32..=4, k)
        .prop_filter("needs positive mass", |w| w.iter().any(|&x| x > 0))
        .prop_map(|w| {
            let z: u32 = w.iter().sum();
            Measure::finite(w.iter().map(|&x| x as f64 / z as f64).collect()).unwrap()
        })
}

fn family(max_states: usize, max_c: usize) -> impl Strategy<Value = Vec<Measure>> {
    (1..=max_states, 1..=max_c).prop_flat_map(|(k, c)| prop::collection::vec(finite_measure(k), c))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn lp_sandwich(ms in family(4, 3)) {
        let lo = lower_bound_g(&ms, &LowerBoundMode::Exhaustive).unwrap().value;
        let lp = lp_optimal_g(&ms).unwrap();
        let hi = upper_bound_g(&tv_matrix(&ms).unwrap()).unwrap();
        prop_assert!(lo <= lp + 1e-9, "lower {lo} > lp {lp}");
        prop_assert!(lp <= hi + 1e-9, "lp {lp} > upper {hi}");
        prop_assert!(lp >= 1.0 - 1e-9 && lp <= ms.len() as f64 + 1e-9);
    }

    #[test]
    fn two_marginals_attain_one_plus_tv(p in finite_measure(4), q in finite_measure(4)) {
        let tv = tv_finite(&p, &q).unwrap();
        let ms = [p, q];
        let lp = lp_optimal_g(&ms).unwrap();
        prop_assert!((lp - (1.0 + tv)).abs() < 1e-6);
        let lo = lower_bound_g(&ms, &LowerBoundMode::Exhaustive).unwrap().value;
        prop_assert!((lo - (1.0 + tv)).abs() < 1e-9);
    }

    #[test]
    fn greedy_mode_never_exceeds_exhaustive(ms in family(5, 5)) {
        let ex = lower_bound_g(&ms, &LowerBoundMode::Exhaustive).unwrap().value;
        let gr = lower_bound_g(&ms, &LowerBoundMode::Greedy).unwrap().value;
        prop_assert!(gr <= ex + 1e-12);
    }

    #[test]
    fn lower_bound_is_permutation_invariant(ms in family(4, 4)) {
        let mut rev = ms.clone();
        rev.reverse();
        let a = lower_bound_g(&ms, &LowerBoundMode::Exhaustive).unwrap().value;
        let b = lower_bound_g(&rev, &LowerBoundMode::Exhaustive).unwrap().value;
        prop_assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn shifted_exponential_closed_form() {
    for c in [2usize, 4, 8, 16, 32] {
        let ms: Vec<Measure> = (1..=c)
            .map(|s| Measure::shifted_exponential(s as f64).unwrap())
            .collect();
        let order: Vec<usize> = (0..c).collect();
        let lo = lower_bound_g(&ms, &LowerBoundMode::Fixed(order))
            .unwrap()
            .value;
        let exact = c as f64 - (c as f64 - 1.0) * (-1.0f64).exp();
        assert!((lo - exact).abs() < 1e-6, "C={c}: {lo} vs {exact}");
    }
}

#[test]
fn couplers_respect_lp_optimum() {
    let mut rng = RngStream::new(21);
    let ms = vec![
        Measure::finite(vec![0.5, 0.3, 0.2, 0.0]).unwrap(),
        Measure::finite(vec![0.1, 0.4, 0.1, 0.4]).unwrap(),
        Measure::finite(vec![0.25, 0.25, 0.25, 0.25]).unwrap(),
    ];
    let lp = lp_optimal_g(&ms).unwrap();
    for cp in [
        &GreedyList(Ordering::Identity) as &dyn grandcouple_core::couplings::Coupler,
        &SharedPoisson,
    ] {
        let (m, se) = estimate_expected_g(cp, &ms, 20_000, &mut rng).unwrap();
        assert!(
            m >= lp - 4.0 * se,
            "{}: {m} ± {se} below optimum {lp}",
            cp.name()
        );
    }
}
