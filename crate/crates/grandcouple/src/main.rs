use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use grandcouple::config::ExperimentConfig;
use grandcouple::error::{HarnessError, EXIT_OK};
use grandcouple::{execute, Command, Overrides};

#[derive(Parser)]
#[command(
    name = "grandcouple",
    version,
    about = "Multi-marginal and grand-coupling experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Expected cluster count of several couplers on a marginal family.
    Multimarginal(Common),
    /// Meeting times of grand-coupled Metropolis-Hastings chains.
    Meet(Common),
    /// Cost of one shared-process coupling call across dimensions.
    Runtime(Common),
    /// Convergence bounds from meeting-time tails.
    Diagnose(Common),
    /// Weight harmonization with group-wise couplings.
    Harmonize(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of replicates per grid cell.
    #[arg(long)]
    reps: Option<usize>,
    /// Worker threads (output does not depend on this).
    #[arg(long)]
    workers: Option<usize>,
    /// Main CSV path; secondary tables and the sidecar go next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(cmd: Command, args: Common) -> Result<(), HarnessError> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    Overrides {
        seed: args.seed,
        reps: args.reps,
        workers: args.workers,
        out: args.out,
    }
    .apply(&mut cfg);
    let report = execute(cmd, &cfg)?;
    for p in &report.outputs {
        eprintln!("wrote {}", p.display());
    }
    eprintln!("wrote {}", report.sidecar.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, args) = match cli.command {
        Sub::Multimarginal(a) => (Command::Multimarginal, a),
        Sub::Meet(a) => (Command::Meet, a),
        Sub::Runtime(a) => (Command::Runtime, a),
        Sub::Diagnose(a) => (Command::Diagnose, a),
        Sub::Harmonize(a) => (Command::Harmonize, a),
    };
    match run(cmd, args) {
        Ok(()) => ExitCode::from(EXIT_OK as u8),
        Err(e) => {
            eprintln!("grandcouple {}: {e}", cmd.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
