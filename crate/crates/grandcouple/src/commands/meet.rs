//! Meeting-time grids of the grand-coupling kernels.

use grandcouple_core::grand::{run_until_meet, MeetingSummary, Method};
use grandcouple_core::RngStream;

use super::Outcome;
use crate::config::{require, ExperimentConfig};
use crate::error::{config_err, Result};
use crate::families::{dims, ChainSetup};
use crate::output::{fmt_f64, Table};
use crate::run::Context;

pub const DEFAULT_REPS: usize = 1_000;

pub const HEADER: [&str; 9] = [
    "family",
    "method",
    "d",
    "C",
    "mean_tau",
    "se",
    "censor_rate",
    "n",
    "censored",
];
pub const REPLICATE_HEADER: [&str; 7] =
    ["family", "method", "d", "C", "replicate", "tau", "censored"];

pub fn run(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome> {
    let mc = require(&cfg.meet, "meet")?;
    let ds = dims(mc.family, &mc.d);
    if ds.is_empty()
        || mc.c.is_empty()
        || mc.c.contains(&0)
        || mc.methods.is_empty()
        || mc.max_iter == 0
    {
        return Err(config_err(
            "need non-empty d, C (all >= 1) and method grids and max_iter >= 1",
        ));
    }
    let reps = ctx.reps(DEFAULT_REPS)?;
    let fam = mc.family.name();
    let mut table = Table::new(&HEADER);
    let mut per_rep = Table::new(&REPLICATE_HEADER);
    let mut censored_total = 0;
    let mut breach = None;
    let mut exp = 0u64;
    for &d in &ds {
        let setup = ChainSetup::new(mc.family, d, &mc.chain)?;
        let init = setup.initial();
        for &method in &mc.methods {
            let method: Method = method.into();
            let spec = setup.kernel(method, &mc.chain)?;
            for &c in &mc.c {
                let taus = ctx.par_map(reps, |r| {
                    let mut rng = RngStream::derive(ctx.seed, exp, r as u64);
                    Ok(run_until_meet(&spec, &init, c, mc.max_iter, false, &mut rng)?.tau)
                })?;
                exp += 1;
                let s = MeetingSummary::from_outcomes(&taus);
                censored_total += s.censored;
                if s.censor_rate() > mc.max_censor_rate && breach.is_none() {
                    breach = Some(format!(
                        "{fam} {} d={d} C={c}: censor rate {} > {}",
                        method.name(),
                        s.censor_rate(),
                        mc.max_censor_rate
                    ));
                }
                let key = [
                    fam.to_string(),
                    method.name().to_string(),
                    d.to_string(),
                    c.to_string(),
                ];
                let mut row = key.to_vec();
                row.extend([
                    fmt_f64(s.mean),
                    fmt_f64(s.se),
                    fmt_f64(s.censor_rate()),
                    s.n.to_string(),
                    s.censored.to_string(),
                ]);
                table.push(row);
                if mc.per_replicate {
                    for (r, tau) in taus.iter().enumerate() {
                        let mut row = key.to_vec();
                        row.extend([
                            r.to_string(),
                            tau.map_or_else(String::new, |t| t.to_string()),
                            tau.is_none().to_string(),
                        ]);
                        per_rep.push(row);
                    }
                }
            }
        }
    }
    let mut out = Outcome::new(table, reps);
    if mc.per_replicate {
        out.extra.push(("replicates", per_rep));
    }
    out.censored = censored_total;
    out.breach = breach;
    Ok(out)
}
