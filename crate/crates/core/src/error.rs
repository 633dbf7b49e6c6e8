use thiserror::Error;

/// Errors raised by samplers, moves, fits and diagnostics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EssError {
    #[error("degenerate ensemble: {0}")]
    DegenerateEnsemble(String),

    #[error("matrix is not PD (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("unbounded slice: stepping-out exceeded {max_expansions} expansions")]
    UnboundedSlice { max_expansions: usize },

    #[error("shrinking did not terminate within {max_contractions} contractions")]
    ShrinkingLimit { max_contractions: usize },

    #[error("invalid current state: log-density at the current point is {0}")]
    InvalidCurrentState(f64),

    #[error("walker {walker} outside support (log-density = -inf)")]
    WalkerOutsideSupport { walker: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("zero variance series")]
    ZeroVariance,

    #[error("chain too short: {n} samples for an IAT estimate of {estimate:.3}")]
    ChainTooShort { estimate: f64, n: usize },

    #[error("iteration {iteration}, walker {walker}: {source}")]
    Walker {
        iteration: u64,
        walker: usize,
        #[source]
        source: Box<EssError>,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

impl EssError {
    pub(crate) fn at_walker(self, iteration: u64, walker: usize) -> Self {
        EssError::Walker {
            iteration,
            walker,
            source: Box::new(self),
        }
    }

    /// Strips walker/iteration tags and returns the underlying error.
    pub fn root(&self) -> &EssError {
        match self {
            EssError::Walker { source, .. } => source.root(),
            other => other,
        }
    }
}

impl From<std::io::Error> for EssError {
    fn from(e: std::io::Error) -> Self {
        EssError::Io(e.to_string())
    }
}

pub type Result<T, E = EssError> = std::result::Result<T, E>;
