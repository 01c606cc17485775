//! Experiment harness for `grandcouple-core`: JSON configuration, seeded
//! parallel replication, and CSV output with JSON metadata sidecars.
//!
//! Every subcommand reads one [`config::ExperimentConfig`], runs its grid
//! on a worker pool where replicate `r` of cell `e` always draws from
//! `RngStream::derive(seed, e, r)`, and writes a CSV plus
//! `<stem>.meta.json`. Output bytes do not depend on the worker count,
//! except for wall-clock columns of `runtime`.

pub mod commands;
pub mod config;
pub mod error;
pub mod families;
pub mod output;
pub mod run;
pub mod stats;

use std::path::PathBuf;
use std::time::Instant;

use crate::commands::Outcome;
use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::output::{companion_path, Sidecar};
use crate::run::Context;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Multimarginal,
    Meet,
    Runtime,
    Diagnose,
    Harmonize,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Multimarginal => "multimarginal",
            Self::Meet => "meet",
            Self::Runtime => "runtime",
            Self::Diagnose => "diagnose",
            Self::Harmonize => "harmonize",
        }
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub reps: Option<usize>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(r) = self.reps {
            cfg.replicates = Some(r);
        }
        if let Some(w) = self.workers {
            cfg.workers = Some(w);
        }
        if let Some(o) = &self.out {
            cfg.out = Some(o.clone());
        }
    }
}

/// Runs a command without touching the filesystem.
pub fn compute(cmd: Command, cfg: &ExperimentConfig) -> Result<Outcome> {
    let ctx = Context::new(cfg)?;
    match cmd {
        Command::Multimarginal => commands::multimarginal::run(cfg, &ctx),
        Command::Meet => commands::meet::run(cfg, &ctx),
        Command::Runtime => commands::runtime::run(cfg, &ctx),
        Command::Diagnose => commands::diagnose::run(cfg, &ctx),
        Command::Harmonize => commands::harmonize::run(cfg, &ctx),
    }
}

/// What [`execute`] wrote.
#[derive(Clone, Debug)]
pub struct Report {
    pub outputs: Vec<PathBuf>,
    pub sidecar: PathBuf,
    pub outcome: Outcome,
}

/// Runs a command and writes its CSV files and sidecar. A censoring
/// breach is reported as an error only after everything is written.
pub fn execute(cmd: Command, cfg: &ExperimentConfig) -> Result<Report> {
    let start = Instant::now();
    let outcome = compute(cmd, cfg)?;
    let wall = start.elapsed().as_secs_f64();
    let main = cfg
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", cmd.name())));
    outcome.table.write(&main)?;
    let mut outputs = vec![main.clone()];
    for (suffix, t) in &outcome.extra {
        let p = companion_path(&main, suffix);
        t.write(&p)?;
        outputs.push(p);
    }
    let sidecar = Sidecar {
        command: cmd.name().into(),
        config_sha256: cfg.hash(),
        git_revision: output::GIT_REVISION.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: cfg.seed,
        replicates: outcome.replicates,
        workers: cfg.workers(),
        wall_time_s: wall,
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        rows: outcome.table.rows.len(),
        censored: outcome.censored,
    }
    .write(&main)?;
    if let Some(msg) = &outcome.breach {
        return Err(HarnessError::Breach(msg.clone()));
    }
    Ok(Report {
        outputs,
        sidecar,
        outcome,
    })
}
