//! One module per subcommand. Each returns its tables; writing files and
//! sidecars is shared in [`crate::execute`].

pub mod diagnose;
pub mod harmonize;
pub mod meet;
pub mod multimarginal;
pub mod runtime;

use crate::output::Table;

/// Tables produced by a command plus what the sidecar needs to know.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub table: Table,
    /// Secondary tables, written next to the main CSV as `<stem>_<suffix>.csv`.
    pub extra: Vec<(&'static str, Table)>,
    pub replicates: usize,
    pub censored: usize,
    /// Set when a censoring or timeout threshold was exceeded.
    pub breach: Option<String>,
}

impl Outcome {
    pub fn new(table: Table, replicates: usize) -> Self {
        Self {
            table,
            replicates,
            ..Default::default()
        }
    }
}
