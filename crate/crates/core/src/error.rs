use thiserror::Error;

/// Errors raised for malformed inputs to the model, parsers, and generators.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MapfError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("generation failed: {0}")]
    Generation(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
}

impl MapfError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        MapfError::InvalidArgument(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        MapfError::Parse {
            line,
            message: msg.into(),
        }
    }
}

/// Why a solver did not return a solution.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    /// The reachable state space was exhausted: no solution exists.
    #[error("instance is unsolvable")]
    Unsolvable,
    /// No solution with cost at most `bound` exists.
    #[error("no solution within cost bound {bound}")]
    UnsolvableWithinBound { bound: usize },
    /// Node or wall-clock budget exhausted. `lower_bound` is the cheapest
    /// open cost at the moment the search stopped, when known.
    #[error("budget exhausted after {nodes_expanded} expansions (lower bound {lower_bound:?})")]
    Timeout {
        nodes_expanded: u64,
        lower_bound: Option<usize>,
    },
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl From<MapfError> for SolveError {
    fn from(e: MapfError) -> Self {
        match e {
            MapfError::Capacity(m) => SolveError::Capacity(m),
            other => SolveError::InvalidInput(other.to_string()),
        }
    }
}
