use std::fmt;
use std::io;
use std::path::PathBuf;

/// Where in an input a parse failure happened.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    /// Byte offset from the start of a binary input.
    Byte(u64),
    /// 1-based line number of a text input.
    Line(usize),
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Byte(off) => write!(f, "byte offset {off}"),
            Location::Line(line) => write!(f, "line {line}"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{format} parse error at {location}: {message}")]
    Parse { format: &'static str, location: Location, message: String },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("similarity is undefined for a zero vector")]
    ZeroVector,

    #[error("graph needs at least 2 nodes, got {nodes}")]
    DegenerateGraph { nodes: usize },

    #[error("modularity is undefined for a graph with zero total edge weight")]
    ZeroWeightGraph,

    #[error("partition covers {got} nodes but the graph has {expected}")]
    PartitionSize { expected: usize, got: usize },

    #[error("lemma {0} is missing from the sense frequency table")]
    UnknownLemma(String),

    #[error("cover is empty")]
    EmptyCover,

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn parse(format: &'static str, location: Location, message: impl Into<String>) -> Self {
        Error::Parse { format, location, message: message.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
