//! Convergence-bound curves from meeting-time tails, and the table of
//! `1 − α̂_C` against Johnson's denominator.

use grandcouple_core::diagnostics::{
    estimate_alpha_c, johnson_denominator, omega, tail_curve, BoundCurve, Omega,
};
use grandcouple_core::grand::{run_until_meet, Method};
use grandcouple_core::{Measure, RngStream};

use super::Outcome;
use crate::config::{require, ExperimentConfig};
use crate::error::{config_err, Result};
use crate::families::ChainSetup;
use crate::output::{fmt_f64, fmt_opt, Table};
use crate::run::Context;

pub const DEFAULT_REPS: usize = 1_000;

/// Draws per independently seeded chunk of an `α_C` estimate.
pub const ALPHA_CHUNK: usize = 1 << 16;

pub const HEADER: [&str; 8] = [
    "d",
    "C",
    "t",
    "tail",
    "johnson",
    "johnson_vacuous",
    "listlevel",
    "combined",
];
pub const ALPHA_HEADER: [&str; 7] = [
    "d",
    "C",
    "one_minus_alpha",
    "alpha_se",
    "omega",
    "johnson_denominator",
    "johnson_vacuous",
];

/// Stream-experiment ids of the α estimates, disjoint from meeting cells.
const ALPHA_EXP: u64 = 1 << 32;

/// `α̂_C` and its SE from fixed-size chunks, so the result does not depend
/// on the number of workers.
pub fn alpha_estimate(
    ctx: &Context,
    pi0: &Measure,
    pi: &Measure,
    c: usize,
    n: usize,
    exp: u64,
) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(config_err("alpha_samples must be >= 1"));
    }
    let chunks = n.div_ceil(ALPHA_CHUNK);
    let parts = ctx.par_map(chunks, |k| {
        let size = ALPHA_CHUNK.min(n - k * ALPHA_CHUNK);
        let mut rng = RngStream::derive(ctx.seed, exp, k as u64);
        let e = estimate_alpha_c(pi0, pi, c, size, &mut rng)?;
        Ok((size as f64, e.value, e.se))
    })?;
    let total: f64 = parts.iter().map(|p| p.0).sum();
    let mean = parts.iter().map(|p| p.0 * p.1).sum::<f64>() / total;
    // Pool within-chunk sums of squares with the between-chunk part.
    let ss: f64 = parts
        .iter()
        .map(|&(m, v, se)| se * se * m * (m - 1.0) + m * (v - mean) * (v - mean))
        .sum();
    let se = if total > 1.0 {
        (ss / (total - 1.0) / total).sqrt()
    } else {
        0.0
    };
    Ok((mean, se))
}

fn johnson_cols(w: &Omega, c: usize) -> (f64, bool) {
    if w.vacuous {
        (f64::NAN, true)
    } else {
        (johnson_denominator(w.value, c), false)
    }
}

pub fn run(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome> {
    let dc = require(&cfg.diagnose, "diagnose")?;
    let bad = |v: &Vec<usize>| v.contains(&0);
    if bad(&dc.d) || bad(&dc.c) || bad(&dc.table_d) || bad(&dc.table_c) {
        return Err(config_err("dimensions and chain counts must be >= 1"));
    }
    if dc.horizon >= dc.max_iter {
        return Err(config_err(
            "horizon must be below max_iter so censored runs do not bias the tail",
        ));
    }
    let reps = ctx.reps(DEFAULT_REPS)?;

    let mut alpha = Table::new(&ALPHA_HEADER);
    let mut cell = 0u64;
    for &d in &dc.table_d {
        let setup = ChainSetup::new(dc.family, d, &dc.chain)?;
        let w = omega(&setup.init, &setup.target)?;
        for &c in &dc.table_c {
            let (a, se) = alpha_estimate(
                ctx,
                &setup.init,
                &setup.target,
                c,
                dc.alpha_samples,
                ALPHA_EXP + cell,
            )?;
            cell += 1;
            let (den, vac) = johnson_cols(&w, c);
            alpha.push(vec![
                d.to_string(),
                c.to_string(),
                fmt_f64(1.0 - a),
                fmt_f64(se),
                fmt_f64(w.value),
                fmt_f64(den),
                vac.to_string(),
            ]);
        }
    }

    let mut table = Table::new(&HEADER);
    let mut censored_total = 0;
    let mut breach = None;
    let method: Method = dc.method.into();
    let mut exp = 0u64;
    for &d in &dc.d {
        let setup = ChainSetup::new(dc.family, d, &dc.chain)?;
        let spec = setup.kernel(method, &dc.chain)?;
        let init = setup.initial();
        let w = omega(&setup.init, &setup.target)?;
        for &c in &dc.c {
            let taus = ctx.par_map(reps, |r| {
                let mut rng = RngStream::derive(ctx.seed, exp, r as u64);
                Ok(run_until_meet(&spec, &init, c, dc.max_iter, false, &mut rng)?.tau)
            })?;
            let censored = taus.iter().filter(|t| t.is_none()).count();
            censored_total += censored;
            let rate = censored as f64 / reps as f64;
            if rate > dc.max_censor_rate && breach.is_none() {
                breach = Some(format!(
                    "d={d} C={c}: censor rate {rate} > {}",
                    dc.max_censor_rate
                ));
            }
            let (a, _) = alpha_estimate(
                ctx,
                &setup.init,
                &setup.target,
                c,
                dc.alpha_samples,
                2 * ALPHA_EXP + exp,
            )?;
            exp += 1;
            let curve =
                BoundCurve::from_tail(tail_curve(&taus, dc.horizon), &w, a.clamp(0.0, 1.0), c)?;
            let listlevel = curve
                .listlevel
                .as_ref()
                .expect("list-level bound always present");
            for (i, t) in curve.t.iter().enumerate() {
                table.push(vec![
                    d.to_string(),
                    c.to_string(),
                    t.to_string(),
                    fmt_f64(curve.tail[i]),
                    fmt_opt(curve.johnson.as_ref().map(|j| j[i])),
                    curve.johnson.is_none().to_string(),
                    fmt_f64(listlevel[i]),
                    fmt_f64(curve.combined[i]),
                ]);
            }
        }
    }
    let mut out = Outcome::new(table, reps);
    out.extra.push(("alpha", alpha));
    out.censored = censored_total;
    out.breach = breach;
    Ok(out)
}
