//! Weight harmonization on the AR(1) chain with group-wise couplings.

use grandcouple_core::couplings::{Anchor, Coupler, GreedyList, Ordering, Star};
use grandcouple_core::diagnostics::{
    ar_marginal_from, harmonize_step, hellinger_sq_gaussian, ArGroupKernel, WeightedEnsemble,
};
use grandcouple_core::poisson::SharedPoisson;
use grandcouple_core::{Measure, RngStream};

use super::Outcome;
use crate::config::{require, ExperimentConfig, GroupCouplerName, HarmonizeConfig};
use crate::error::{config_err, Result};
use crate::output::{fmt_f64, Table};
use crate::run::Context;

pub const DEFAULT_REPS: usize = 1;

pub const HEADER: [&str; 6] = [
    "replicate",
    "t",
    "weight_hellinger",
    "exact_hellinger",
    "log_total_weight",
    "total_weight_rel",
];

/// Row values of one trajectory: `(t, weight H², exact H², log ΣW)`.
pub type Trace = Vec<(u64, f64, f64, f64)>;

fn gaussian(m: &Measure) -> &grandcouple_core::measures::GaussianDiag {
    match m {
        Measure::GaussianDiag(g) => g,
        _ => unreachable!("AR marginals are Gaussian"),
    }
}

fn trajectory<K: Coupler>(hc: &HarmonizeConfig, coupler: K, rng: &mut RngStream) -> Result<Trace> {
    let pi = Measure::gaussian(vec![0.0; hc.d], vec![1.0; hc.d])?;
    let pi0 = ar_marginal_from(hc.init_mean, hc.init_var, 0, hc.rho, hc.d)?;
    let mut we = WeightedEnsemble::importance(&pi0, &pi, hc.n, hc.m, rng)?;
    let kernel = ArGroupKernel {
        rho: hc.rho,
        coupler,
    };
    let mut trace = Vec::with_capacity(hc.horizon as usize + 1);
    for t in 0..=hc.horizon {
        if t > 0 {
            harmonize_step(&mut we, &kernel, rng)?;
        }
        let exact = hellinger_sq_gaussian(
            gaussian(&ar_marginal_from(
                hc.init_mean,
                hc.init_var,
                t,
                hc.rho,
                hc.d,
            )?),
            gaussian(&pi),
        )?;
        trace.push((t, we.weight_hellinger(), exact, we.log_total_weight()));
    }
    Ok(trace)
}

pub fn simulate(hc: &HarmonizeConfig, rng: &mut RngStream) -> Result<Trace> {
    match hc.coupler {
        GroupCouplerName::Poisson => trajectory(hc, SharedPoisson, rng),
        GroupCouplerName::FixedAnchor => trajectory(hc, Star(Anchor::Fixed(0)), rng),
        GroupCouplerName::List => trajectory(hc, GreedyList(Ordering::Identity), rng),
    }
}

pub fn run(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome> {
    let hc = require(&cfg.harmonize, "harmonize")?;
    if hc.m < 2 || hc.n == 0 || hc.n % hc.m != 0 {
        return Err(config_err(format!(
            "N = {} must be a positive multiple of the group size m = {} >= 2",
            hc.n, hc.m
        )));
    }
    if hc.d == 0 || hc.rho.abs() >= 1.0 || !(hc.init_var > 0.0) {
        return Err(config_err("need d >= 1, |rho| < 1 and init_var > 0"));
    }
    let reps = ctx.reps(DEFAULT_REPS)?;
    let traces = ctx.par_map(reps, |r| {
        simulate(&hc, &mut RngStream::derive(ctx.seed, 0, r as u64))
    })?;
    let mut table = Table::new(&HEADER);
    for (r, trace) in traces.iter().enumerate() {
        let lz0 = trace[0].3;
        for &(t, wh, exact, lz) in trace {
            table.push(vec![
                r.to_string(),
                t.to_string(),
                fmt_f64(wh),
                fmt_f64(exact),
                fmt_f64(lz),
                fmt_f64((lz - lz0).exp()),
            ]);
        }
    }
    Ok(Outcome::new(table, reps))
}
