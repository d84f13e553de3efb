use std::path::PathBuf;

use thiserror::Error;

use crate::graph_store::VertexId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("bad magic in graph header: expected \"SEMG\", found {found:?}")]
    BadMagic { found: [u8; 4] },

    #[error("unsupported graph format version {0}")]
    BadVersion(u64),

    #[error("truncated {what}: expected {expected} bytes, found {found}")]
    Truncated {
        what: &'static str,
        expected: u64,
        found: u64,
    },

    #[error("inconsistent graph files: {0}")]
    Inconsistent(String),

    #[error("vertex {vertex} out of range (n = {n})")]
    VertexOutOfRange { vertex: VertexId, n: u64 },

    #[error("read of adjacency list for vertex {vertex} failed: {source}")]
    AdjacencyRead {
        vertex: VertexId,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("reduction slot {0} is not ready until the next barrier")]
    NotReady(usize),

    #[error("memory contract violated: {0}")]
    MemoryContract(String),

    #[error("superstep cap of {0} exceeded")]
    SuperstepCap(usize),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for errors caused by running an algorithm on the wrong kind of
    /// graph (the CLI maps these to exit code 3).
    pub fn is_domain(&self) -> bool {
        matches!(self, Error::Domain(_))
    }
}
