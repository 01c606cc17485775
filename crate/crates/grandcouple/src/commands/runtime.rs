//! Wall time and atom counts of one shared-process coupling call, for the
//! barycenter proposal and a single broad Gaussian proposal.

use std::time::Instant;

use grandcouple_core::poisson::{gaussian_probe_family, probe_once, ProbeProposal};
use grandcouple_core::{Error, RngStream};

use super::Outcome;
use crate::config::{require, ExperimentConfig, ProposalName};
use crate::error::{config_err, Result};
use crate::output::{fmt_f64, Table};
use crate::run::Context;

pub const DEFAULT_REPS: usize = 100;

pub const HEADER: [&str; 8] = [
    "proposal",
    "d",
    "C",
    "mean_ms",
    "mean_atoms_examined",
    "mean_atoms_generated",
    "n",
    "censored",
];

/// One timed replicate; `None` when it hit the atom budget or the timeout.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Probe {
    pub ms: f64,
    pub atoms_examined: f64,
    pub atoms_generated: f64,
}

fn label(p: ProposalName) -> &'static str {
    match p {
        ProposalName::Barycenter => "barycenter",
        ProposalName::SingleGaussian => "single-gaussian",
    }
}

pub fn probe(
    proposal: ProposalName,
    c: usize,
    d: usize,
    atom_cap: u64,
    timeout_ms: f64,
    rng: &mut RngStream,
) -> Result<Option<Probe>> {
    let targets = gaussian_probe_family(c, d, rng)?;
    let p = match proposal {
        ProposalName::Barycenter => ProbeProposal::Barycenter,
        ProposalName::SingleGaussian => ProbeProposal::SingleGaussian,
    };
    let t0 = Instant::now();
    let cost = match probe_once(&targets, p, atom_cap, rng) {
        Ok(cost) => cost,
        Err(Error::IterationCap { .. }) => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let ms = t0.elapsed().as_secs_f64() * 1e3;
    if ms > timeout_ms {
        return Ok(None);
    }
    Ok(Some(Probe {
        ms,
        atoms_examined: cost.mean_atoms(),
        atoms_generated: cost.atoms_generated as f64,
    }))
}

pub fn run(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome> {
    let rc = require(&cfg.runtime, "runtime")?;
    if rc.c == 0 || rc.d.is_empty() || rc.d.contains(&0) || rc.proposals.is_empty() {
        return Err(config_err(
            "need C >= 1, a non-empty d grid (all >= 1) and proposals",
        ));
    }
    let reps = ctx.reps(DEFAULT_REPS)?;
    let mut table = Table::new(&HEADER);
    let mut censored_total = 0;
    for &proposal in &rc.proposals {
        for (di, &d) in rc.d.iter().enumerate() {
            if proposal == ProposalName::SingleGaussian && d > rc.max_d_single {
                continue;
            }
            // Targets depend on (d, replicate) only, so proposals see the same families.
            let probes = ctx.par_map(reps, |r| {
                let mut rng = RngStream::derive(ctx.seed, di as u64, r as u64);
                probe(proposal, rc.c, d, rc.atom_cap, rc.timeout_ms, &mut rng)
            })?;
            let done: Vec<Probe> = probes.iter().flatten().copied().collect();
            let censored = reps - done.len();
            censored_total += censored;
            let mean = |f: fn(&Probe) -> f64| {
                if done.is_empty() {
                    f64::NAN
                } else {
                    done.iter().map(f).sum::<f64>() / done.len() as f64
                }
            };
            table.push(vec![
                label(proposal).into(),
                d.to_string(),
                rc.c.to_string(),
                fmt_f64(mean(|p| p.ms)),
                fmt_f64(mean(|p| p.atoms_examined)),
                fmt_f64(mean(|p| p.atoms_generated)),
                reps.to_string(),
                censored.to_string(),
            ]);
        }
    }
    let mut out = Outcome::new(table, reps);
    out.censored = censored_total;
    let cells = out.table.rows.len() * reps;
    if cells > 0 && censored_total as f64 / cells as f64 > rc.max_censor_rate {
        out.breach = Some(format!(
            "{censored_total} of {cells} runtime replicates censored"
        ));
    }
    Ok(out)
}
