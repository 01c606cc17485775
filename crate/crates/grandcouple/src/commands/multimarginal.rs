//! Expected cluster count `E[G]` of several couplers on a marginal family.

use grandcouple_core::bounds::{lower_bound_g, LowerBoundMode, EXHAUSTIVE_MAX_C};
use grandcouple_core::couplings::{Anchor, Coupler, GreedyList, Ordering, Sequence, Star};
use grandcouple_core::measures::random_sparse_finite;
use grandcouple_core::poisson::SharedPoisson;
use grandcouple_core::stats::mean_se;
use grandcouple_core::{Measure, RngStream};

use super::Outcome;
use crate::config::{require, CouplerName, ExperimentConfig, MarginalFamily, MultimarginalConfig};
use crate::error::{config_err, Result};
use crate::output::{fmt_f64, Table};
use crate::run::Context;

pub const DEFAULT_REPS: usize = 20_000;

pub const HEADER: [&str; 7] = ["family", "C", "coupler", "mean_g", "se", "n", "lower_bound"];

pub fn coupler(name: CouplerName) -> Box<dyn Coupler + Send + Sync> {
    match name {
        CouplerName::List => Box::new(GreedyList(Ordering::Identity)),
        CouplerName::ListRandom => Box::new(GreedyList(Ordering::Random)),
        CouplerName::Poisson => Box::new(SharedPoisson),
        CouplerName::RandomAnchor => Box::new(Star(Anchor::Random)),
        CouplerName::FixedAnchor => Box::new(Star(Anchor::Fixed(0))),
        CouplerName::RandomSequence => Box::new(Sequence),
    }
}

pub fn coupler_label(name: CouplerName) -> &'static str {
    match name {
        CouplerName::List => "list",
        CouplerName::ListRandom => "list-random",
        CouplerName::Poisson => "poisson",
        CouplerName::RandomAnchor => "random-anchor",
        CouplerName::FixedAnchor => "fixed-anchor",
        CouplerName::RandomSequence => "random-sequence",
    }
}

fn family_label(f: MarginalFamily) -> &'static str {
    match f {
        MarginalFamily::ShiftedExponential => "shifted-exponential",
        MarginalFamily::RandomSparseDiscrete => "random-sparse-discrete",
        MarginalFamily::Identical => "identical",
        MarginalFamily::Custom => "custom",
    }
}

/// The `C` marginals of one cell. Random families draw from a stream that
/// depends only on the seed and `C`.
pub fn marginals(cfg: &MultimarginalConfig, c: usize, seed: u64) -> Result<Vec<Measure>> {
    Ok(match cfg.family {
        MarginalFamily::ShiftedExponential => (1..=c)
            .map(|i| Measure::shifted_exponential(i as f64))
            .collect::<Result<_, _>>()?,
        MarginalFamily::RandomSparseDiscrete => {
            let mut rng = RngStream::derive(seed, u64::MAX, c as u64);
            (0..c)
                .map(|_| random_sparse_finite(cfg.states, cfg.support, &mut rng))
                .collect::<Result<_, _>>()?
        }
        MarginalFamily::Identical => {
            let base = match &cfg.base {
                Some(s) => s.build()?,
                None => Measure::finite(vec![0.2; 5])?,
            };
            vec![base; c]
        }
        MarginalFamily::Custom => {
            let ms = cfg
                .marginals
                .as_ref()
                .ok_or_else(|| config_err("custom family needs \"marginals\""))?;
            if ms.len() != c {
                return Err(config_err(format!(
                    "custom family has {} marginals but C = {c}",
                    ms.len()
                )));
            }
            ms.iter().map(|m| m.build()).collect::<Result<_>>()?
        }
    })
}

fn lower_bound(cfg: &MultimarginalConfig, ms: &[Measure]) -> Result<f64> {
    let mode = match cfg.family {
        // Left-to-right is the optimal ordering for nested shifts.
        MarginalFamily::ShiftedExponential => LowerBoundMode::Fixed((0..ms.len()).collect()),
        _ if ms.len() <= EXHAUSTIVE_MAX_C => LowerBoundMode::Exhaustive,
        _ => LowerBoundMode::Greedy,
    };
    Ok(lower_bound_g(ms, &mode)?.value)
}

pub fn run(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome> {
    let mm = require(&cfg.multimarginal, "multimarginal")?;
    if mm.c.is_empty() || mm.c.contains(&0) || mm.couplers.is_empty() {
        return Err(config_err(
            "need a non-empty C grid (all >= 1) and coupler list",
        ));
    }
    let reps = ctx.reps(DEFAULT_REPS)?;
    let mut table = Table::new(&HEADER);
    for (ci, &c) in mm.c.iter().enumerate() {
        let ms = marginals(&mm, c, ctx.seed)?;
        let lb = lower_bound(&mm, &ms)?;
        for (ki, &name) in mm.couplers.iter().enumerate() {
            let k = coupler(name);
            let exp = (ci * mm.couplers.len() + ki) as u64;
            let gs = ctx.par_map(reps, |r| {
                let mut rng = RngStream::derive(ctx.seed, exp, r as u64);
                Ok(k.couple(&ms, &mut rng)?.g as f64)
            })?;
            let (mean, se) = mean_se(&gs);
            table.push(vec![
                family_label(mm.family).into(),
                c.to_string(),
                coupler_label(name).into(),
                fmt_f64(mean),
                fmt_f64(se),
                reps.to_string(),
                fmt_f64(lb),
            ]);
        }
    }
    Ok(Outcome::new(table, reps))
}
