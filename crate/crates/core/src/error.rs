use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Caller supplied a value outside the domain of the operation.
    #[error("invalid input: {0}")]
    Input(String),

    /// Textual input could not be parsed.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    /// Two objects that must share a proposition universe do not.
    #[error("proposition universes differ: [{left}] vs [{right}]")]
    UniverseMismatch { left: String, right: String },

    /// Two automata that must share an alphabet do not.
    #[error("automaton alphabets differ")]
    AlphabetMismatch,

    /// Value iteration stopped before reaching the requested tolerance.
    #[error("value iteration did not converge after {sweeps} sweeps (residual {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },

    /// A search-based learner ran out of node expansions.
    #[error("search budget of {budget} expansions exhausted at k = {states}")]
    BudgetExhausted { budget: u64, states: usize },

    /// No consistent machine exists within the requested state bound.
    #[error("no consistent machine with at most {k_max} states")]
    NoMachine { k_max: usize },

    /// A sample contains two traces that disagree on a shared prefix.
    #[error("sample conflict: {0}")]
    Conflict(String),

    #[error("unknown task `{0}`")]
    UnknownTask(String),

    #[error("unknown method `{0}`")]
    UnknownMethod(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn parse(line: usize, column: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column,
            message: msg.into(),
        }
    }

    pub(crate) fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
