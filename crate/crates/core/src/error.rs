//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by dataset IO, validation, and the numeric operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    /// A record in an input file failed to parse or violated the format.
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    /// A graph violated a structural invariant (bad index, self loop,
    /// arity mismatch, duplicate edge with conflicting attributes, ...).
    #[error("invalid graph `{id}`: {msg}")]
    InvalidGraph { id: String, msg: String },

    /// An id was not present in the dataset or hierarchy.
    #[error("unknown graph id `{0}`")]
    UnknownId(String),

    /// A mass lookup failed for a node attribute code.
    #[error("no mass entry for node attribute code {0}")]
    MissingMass(u32),

    /// An operation that needs node attributes was given an arity-0 graph.
    #[error("graph `{0}` has no node attributes")]
    Unattributed(String),

    /// An operation that needs a nonempty graph was given an empty one.
    #[error("graph `{0}` is empty")]
    EmptyGraph(String),

    /// A parameter was outside its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid_graph(id: &str, msg: impl Into<String>) -> Self {
        Error::InvalidGraph {
            id: id.to_owned(),
            msg: msg.into(),
        }
    }

    pub(crate) fn parse(path: &str, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.to_owned(),
            line,
            msg: msg.into(),
        }
    }
}
