//! The algorithm library. Every algorithm is a vertex program run by
//! [`Engine`](crate::Engine) and comes in several variants that compute the
//! same answer with different I/O and messaging behavior.

pub mod betweenness;
pub mod bfs;
pub mod coreness;
pub mod louvain;
pub mod modularity;
pub mod pagerank;
pub mod triangles;

use serde::Serialize;

use crate::engine::{MemoryReport, RunOutput};
use crate::error::{Error, Result};
use crate::graph_store::GraphHandle;
use crate::io_engine::IoStatsSnapshot;

pub use betweenness::{betweenness, BcResult, BcVariant};
pub use bfs::{bfs, estimate_diameter, multi_bfs, BfsResult, DiameterResult, DiameterVariant, MultiBfsResult};
pub use coreness::{coreness, CorenessConfig, CorenessResult};
pub use louvain::{louvain, LouvainConfig, LouvainResult};
pub use modularity::{modularity, ModularityResult};
pub use pagerank::{pagerank, PageRankConfig, PageRankResult, PageRankVariant};
pub use triangles::{triangle_count, TriangleConfig, TriangleLevel, TriangleOrder, TriangleResult};

/// Totals over the engine runs one algorithm call made.
#[derive(Debug, Clone, Default, Serialize)]
pub struct RunSummary {
    pub runs: usize,
    pub supersteps: usize,
    pub stats: IoStatsSnapshot,
    /// Field-wise high-water over all runs.
    pub memory: MemoryReport,
    /// Vertex activations per worker, summed over runs.
    pub partition_work: Vec<u64>,
}

impl RunSummary {
    pub(crate) fn absorb<S>(&mut self, out: &RunOutput<S>) {
        self.merge(&RunSummary {
            runs: 1,
            supersteps: out.supersteps,
            stats: out.stats,
            memory: out.memory,
            partition_work: out.partition_work.clone(),
        });
    }

    pub fn merge(&mut self, o: &RunSummary) {
        self.runs += o.runs;
        self.supersteps += o.supersteps;
        self.stats = self.stats.plus(&o.stats);
        self.memory = self.memory.max(&o.memory);
        if self.partition_work.len() < o.partition_work.len() {
            self.partition_work.resize(o.partition_work.len(), 0);
        }
        for (a, b) in self.partition_work.iter_mut().zip(&o.partition_work) {
            *a += b;
        }
    }
}

pub(crate) fn require_directed(g: &GraphHandle, algo: &str) -> Result<()> {
    if g.is_directed() {
        Ok(())
    } else {
        Err(Error::domain(format!("{algo} requires a directed graph")))
    }
}

pub(crate) fn require_undirected(g: &GraphHandle, algo: &str) -> Result<()> {
    if g.is_directed() {
        Err(Error::domain(format!("{algo} requires an undirected graph")))
    } else {
        Ok(())
    }
}

/// Vertex ids must fit the 32-bit labels some programs keep per vertex.
pub(crate) fn require_u32_ids(g: &GraphHandle, algo: &str) -> Result<()> {
    if g.num_vertices() >= u64::from(u32::MAX) {
        return Err(Error::Config(format!(
            "{algo} supports fewer than 2^32 - 1 vertices"
        )));
    }
    Ok(())
}
