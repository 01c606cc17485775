use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("sample space mismatch: {0}")]
    SpaceMismatch(String),

    #[error("unsupported measure kind for {op}: {kind}")]
    UnsupportedKind {
        op: &'static str,
        kind: &'static str,
    },

    #[error("rejection loop exceeded {cap} iterations in {context}")]
    IterationCap { context: &'static str, cap: u64 },

    /// A density ratio exceeded the bound promised to the PFR sampler.
    #[error("density ratio {ratio} exceeds declared bound {bound}")]
    InvalidBound { ratio: f64, bound: f64 },

    #[error("chain occupies a null state (log target = -inf)")]
    NullState,

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("simplex did not converge within {0} pivots")]
    SimplexIterationCap(usize),

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
