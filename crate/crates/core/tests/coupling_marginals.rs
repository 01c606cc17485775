//! Every coupler must leave each coordinate with its own marginal.

mod common;

use common::{chi_square_p, ks_p, LEVEL};
use grandcouple_core::couplings::{
    list_coupling, Anchor, Coupler, GreedyList, Ordering, Sequence, Star,
};
use grandcouple_core::measures::random_sparse_finite;
use grandcouple_core::poisson::SharedPoisson;
use grandcouple_core::special::normal_cdf;
use grandcouple_core::{Measure, Point, RngStream};

fn couplers() -> Vec<Box<dyn Coupler>> {
    vec![
        Box::new(GreedyList(Ordering::Identity)),
        Box::new(GreedyList(Ordering::Random)),
        Box::new(Star(Anchor::Random)),
        Box::new(Star(Anchor::Fixed(1))),
        Box::new(Sequence),
        Box::new(SharedPoisson),
    ]
}

/// The greedy list coupler is exact only on cell-structured families.
fn gaussian_couplers() -> Vec<Box<dyn Coupler>> {
    couplers()
        .into_iter()
        .filter(|c| c.name() != "list")
        .collect()
}

fn finite_family(seed: u64) -> Vec<Measure> {
    let mut rng = RngStream::new(seed);
    (0..4)
        .map(|_| random_sparse_finite(8, 4, &mut rng).unwrap())
        .collect()
}

fn probs(m: &Measure) -> &[f64] {
    match m {
        Measure::Finite(f) => f.probs(),
        _ => unreachable!(),
    }
}

#[test]
fn finite_marginals_chi_square() {
    let ms = finite_family(11);
    let n = 20_000;
    for cp in couplers() {
        let mut rng = RngStream::derive(3, 0, 0);
        let mut counts = vec![vec![0usize; 8]; ms.len()];
        for _ in 0..n {
            let draw = cp.couple(&ms, &mut rng).unwrap();
            for (i, v) in draw.values.iter().enumerate() {
                counts[i][v.as_state().unwrap()] += 1;
            }
        }
        for (i, m) in ms.iter().enumerate() {
            let p = chi_square_p(&counts[i], probs(m));
            assert!(p > LEVEL, "{} coordinate {i}: p = {p}", cp.name());
        }
    }
}

#[test]
fn shifted_exponential_marginals_ks() {
    let shifts = [0.0, 0.3, 1.0, 2.5];
    let ms: Vec<Measure> = shifts
        .iter()
        .map(|&s| Measure::shifted_exponential(s).unwrap())
        .collect();
    let n = 10_000;
    for cp in couplers() {
        let mut rng = RngStream::derive(4, 0, 0);
        let mut xs = vec![Vec::with_capacity(n); ms.len()];
        for _ in 0..n {
            let draw = cp.couple(&ms, &mut rng).unwrap();
            for (i, v) in draw.values.iter().enumerate() {
                xs[i].push(v.as_slice().unwrap()[0]);
            }
        }
        for (i, &s) in shifts.iter().enumerate() {
            let p = ks_p(&xs[i], |x| if x < s { 0.0 } else { -(-(x - s)).exp_m1() });
            assert!(p > LEVEL, "{} coordinate {i}: p = {p}", cp.name());
        }
    }
}

#[test]
fn gaussian_marginals_ks() {
    let means = [-0.5, 0.0, 0.8];
    let ms: Vec<Measure> = means
        .iter()
        .map(|&m| Measure::gaussian(vec![m], vec![1.0]).unwrap())
        .collect();
    let n = 10_000;
    for cp in gaussian_couplers() {
        let mut rng = RngStream::derive(5, 0, 0);
        let mut xs = vec![Vec::with_capacity(n); ms.len()];
        for _ in 0..n {
            let draw = cp.couple(&ms, &mut rng).unwrap();
            for (i, v) in draw.values.iter().enumerate() {
                xs[i].push(v.as_slice().unwrap()[0]);
            }
        }
        for (i, &m) in means.iter().enumerate() {
            let p = ks_p(&xs[i], |x| normal_cdf(x - m));
            assert!(p > LEVEL, "{} coordinate {i}: p = {p}", cp.name());
        }
    }
}

#[test]
fn list_coupling_marginals() {
    let ms = finite_family(12);
    let (mu, nus) = (&ms[0], &ms[1..]);
    let n = 20_000;
    let mut rng = RngStream::new(6);
    let mut cx = vec![0usize; 8];
    let mut cy = vec![vec![0usize; 8]; nus.len()];
    for _ in 0..n {
        let r = list_coupling(mu, nus, &mut rng).unwrap();
        cx[r.x.as_state().unwrap()] += 1;
        for (j, y) in r.ys.iter().enumerate() {
            cy[j][y.as_state().unwrap()] += 1;
        }
        if let Some(j) = r.matched_index {
            assert!(r.x.same_bits(&r.ys[j]));
        }
    }
    assert!(chi_square_p(&cx, probs(mu)) > LEVEL);
    for (j, nu) in nus.iter().enumerate() {
        assert!(chi_square_p(&cy[j], probs(nu)) > LEVEL, "list member {j}");
    }
}

#[test]
fn identical_marginals_collapse() {
    let m = Measure::gaussian(vec![0.0, 1.0], vec![1.0, 2.0]).unwrap();
    let ms = vec![m; 5];
    let mut rng = RngStream::new(7);
    assert!(GreedyList(Ordering::Identity)
        .couple(&ms, &mut rng)
        .is_err());
    for cp in gaussian_couplers() {
        for _ in 0..200 {
            let d = cp.couple(&ms, &mut rng).unwrap();
            assert_eq!(d.g, 1, "{}", cp.name());
            assert!(d.values.iter().all(|v| matches!(v, Point::Vector(_))));
        }
    }
}
