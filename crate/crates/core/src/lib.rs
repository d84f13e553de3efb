//! Semi-external-memory graph analytics: vertex state in memory, edge lists
//! on disk behind a page cache, algorithms written as vertex programs.

pub mod algorithms;
pub mod cli;
pub mod engine;
pub mod error;
pub mod generators;
pub mod graph_store;
pub mod io_engine;

pub use engine::{Engine, Mode, RunConfig};
pub use error::{Error, Result};
pub use graph_store::{open_graph, Direction, GraphHandle, VertexId};
pub use io_engine::{IoConfig, IoStatsSnapshot};
