//! Modularity of a vertex partition, streamed over adjacency lists:
//! `Q = S_in/2m - Σ_c (tot_c/2m)²`, with `S_in` the number of ordered pairs
//! of adjacent vertices sharing a community and `tot_c` the degree total of
//! community `c`.

use std::collections::HashMap;

use super::{require_undirected, RunSummary};
use crate::engine::{
    Adjacency, Context, Engine, Initial, Master, ReduceOp, Reduction, RunConfig, VertexProgram,
};
use crate::error::{Error, Result};
use crate::graph_store::{Direction, VertexId};

#[derive(Debug, Clone)]
pub struct ModularityResult {
    pub q: f64,
    pub summary: RunSummary,
}

/// `assignment[v]` is the community label of vertex `v`.
pub fn modularity(engine: &Engine, assignment: &[u64], run: &RunConfig) -> Result<ModularityResult> {
    let g = engine.graph();
    require_undirected(g, "modularity")?;
    let n = g.num_vertices();
    if assignment.len() as u64 != n {
        return Err(Error::Config(format!(
            "assignment covers {} of {n} vertices",
            assignment.len()
        )));
    }
    let m2 = 2 * g.num_edges() as i128;
    let mut summary = RunSummary::default();
    if m2 == 0 {
        return Ok(ModularityResult { q: 0.0, summary });
    }
    let mut p = Streaming {
        labels: assignment,
        s_in: 0,
    };
    let out = engine.run(&mut p, Initial::All, run)?;
    summary.absorb(&out);
    let mut tot: HashMap<u64, i128> = HashMap::new();
    for (v, &c) in assignment.iter().enumerate() {
        *tot.entry(c).or_default() += i128::from(g.degree_unchecked(v as VertexId, Direction::Out));
    }
    let squares: i128 = tot.values().map(|t| t * t).sum();
    let scaled = m2 * i128::from(p.s_in) - squares;
    Ok(ModularityResult {
        q: scaled as f64 / (m2 * m2) as f64,
        summary,
    })
}

struct Streaming<'a> {
    labels: &'a [u64],
    s_in: i64,
}

impl VertexProgram for Streaming<'_> {
    type State = ();
    type Message = ();

    fn init(&self, _v: VertexId) {}

    fn on_activate(&self, v: VertexId, _s: &mut (), ctx: &mut Context<'_, Self>) -> Result<()> {
        if ctx.degree(v, Direction::Out)? > 0 {
            ctx.request_adjacency(v, Direction::Out)?;
        }
        Ok(())
    }

    fn on_adjacency(&self, v: VertexId, _s: &mut (), adj: Adjacency<'_>, ctx: &mut Context<'_, Self>) -> Result<()> {
        let own = self.labels[v as usize];
        let same = adj.list.iter().filter(|&&u| self.labels[u as usize] == own).count();
        ctx.reduce(0, same as i64)
    }

    fn reductions(&self) -> Vec<Reduction> {
        vec![Reduction::new_i64(ReduceOp::Sum)]
    }

    fn master(&mut self, m: &mut Master<'_, ()>) -> Result<()> {
        self.s_in += m.reduced(0).as_i64();
        Ok(())
    }
}
