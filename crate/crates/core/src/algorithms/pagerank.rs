//! Damped PageRank, `R(v) = (1-c)/n + c·(Σ_{u→v} R(u)/N_u + D/n)` where `D`
//! is the rank held by vertices without out-edges.
//!
//! Push keeps a residual per vertex and multicasts it along out-edges once
//! it reaches the threshold; ranks are fixed-point integers so sums are exact
//! and independent of delivery order. Pull re-reads in-edges of every vertex
//! whose in-neighbors changed and reads out-edges only to activate them.

use std::str::FromStr;

use serde::Serialize;

use super::{require_directed, RunSummary};
use crate::engine::{
    Adjacency, Context, Engine, Initial, Master, ReduceOp, Reduction, RunConfig, VertexProgram,
};
use crate::error::{Error, Result};
use crate::graph_store::{Direction, GraphHandle, VertexId};

/// One unit of rank in the push variant's fixed-point representation.
const SCALE: f64 = (1u64 << 60) as f64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PageRankConfig {
    pub damping: f64,
    /// Per-vertex change below which a vertex stops propagating, as a
    /// fraction of the uniform rank `1/n`.
    pub delta_threshold: f64,
    pub max_iterations: usize,
}

impl Default for PageRankConfig {
    fn default() -> Self {
        PageRankConfig {
            damping: 0.85,
            delta_threshold: 1e-3,
            max_iterations: 1000,
        }
    }
}

impl PageRankConfig {
    /// Absolute rank threshold on an `n`-vertex graph.
    pub fn absolute_threshold(&self, n: u64) -> f64 {
        self.delta_threshold / n.max(1) as f64
    }

    fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(Error::Config(format!("damping {} not in (0, 1)", self.damping)));
        }
        if self.delta_threshold.is_nan() || self.delta_threshold <= 0.0 {
            return Err(Error::Config("delta_threshold must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PageRankVariant {
    Push,
    Pull,
}

impl PageRankVariant {
    pub const ALL: [PageRankVariant; 2] = [PageRankVariant::Push, PageRankVariant::Pull];

    pub fn name(self) -> &'static str {
        match self {
            PageRankVariant::Push => "push",
            PageRankVariant::Pull => "pull",
        }
    }
}

impl FromStr for PageRankVariant {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "push" => Ok(PageRankVariant::Push),
            "pull" => Ok(PageRankVariant::Pull),
            _ => Err(format!("unknown pagerank variant {s:?} (push, pull)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PageRankResult {
    /// Sums to 1.
    pub ranks: Vec<f64>,
    pub iterations: usize,
    pub summary: RunSummary,
}

pub fn pagerank(
    engine: &Engine,
    cfg: &PageRankConfig,
    variant: PageRankVariant,
    run: &RunConfig,
) -> Result<PageRankResult> {
    cfg.validate()?;
    let g = engine.graph();
    require_directed(g, "pagerank")?;
    let n = g.num_vertices();
    if n == 0 {
        return Ok(PageRankResult {
            ranks: Vec::new(),
            iterations: 0,
            summary: RunSummary::default(),
        });
    }
    let mut run = run.clone();
    let default_cap = (10 * n as usize).max(100);
    run.superstep_cap = Some(run.superstep_cap.unwrap_or(default_cap).max(cfg.max_iterations + 1));
    let mut summary = RunSummary::default();
    let (raw, iterations) = match variant {
        PageRankVariant::Push => {
            let mut p = Push {
                damping: cfg.damping,
                base: ((1.0 - cfg.damping) / n as f64 * SCALE) as i64,
                threshold: (cfg.absolute_threshold(n) * SCALE) as i64,
                n,
                pool: 0,
                max_iterations: cfg.max_iterations,
            };
            let out = engine.run(&mut p, Initial::All, &run)?;
            summary.absorb(&out);
            let spread = p.pool as f64 / n as f64;
            let raw: Vec<f64> = out.states.iter().map(|s| s.rank as f64 + spread).collect();
            (raw, out.supersteps)
        }
        PageRankVariant::Pull => {
            let init = 1.0 / n as f64;
            let mut p = Pull {
                graph: g,
                damping: cfg.damping,
                threshold: cfg.absolute_threshold(n),
                n,
                contrib: Vec::new(),
                dangling: 0.0,
                max_iterations: cfg.max_iterations,
            };
            p.dangling = p.refresh((0..n).map(|_| init));
            let out = engine.run(&mut p, Initial::All, &run)?;
            summary.absorb(&out);
            let raw: Vec<f64> = out.states.iter().map(|s| s.rank).collect();
            (raw, out.supersteps)
        }
    };
    let total: f64 = raw.iter().sum();
    Ok(PageRankResult {
        ranks: raw.into_iter().map(|r| r / total).collect(),
        iterations,
        summary,
    })
}

struct Push {
    damping: f64,
    base: i64,
    threshold: i64,
    n: u64,
    /// Undistributed rank pushed by dangling vertices.
    pool: i64,
    max_iterations: usize,
}

#[derive(Debug, Clone, Copy)]
struct PushState {
    rank: i64,
    sent: i64,
}

impl VertexProgram for Push {
    type State = PushState;
    type Message = i64;
    const COMBINES: bool = true;

    fn init(&self, _v: VertexId) -> PushState {
        PushState {
            rank: self.base,
            sent: 0,
        }
    }

    fn on_activate(&self, v: VertexId, s: &mut PushState, ctx: &mut Context<'_, Self>) -> Result<()> {
        let unsent = s.rank - s.sent;
        if unsent < self.threshold.max(1) {
            return Ok(());
        }
        if ctx.degree(v, Direction::Out)? == 0 {
            ctx.reduce(0, (unsent as f64 * self.damping) as i64)?;
            s.sent = s.rank;
            return Ok(());
        }
        ctx.request_adjacency(v, Direction::Out)
    }

    fn on_adjacency(
        &self,
        _v: VertexId,
        s: &mut PushState,
        adj: Adjacency<'_>,
        ctx: &mut Context<'_, Self>,
    ) -> Result<()> {
        let unsent = s.rank - s.sent;
        s.sent = s.rank;
        let share = (unsent as f64 * self.damping) as i64 / adj.list.len() as i64;
        if share > 0 {
            ctx.multicast(adj.list, share)?;
        }
        Ok(())
    }

    fn on_message(&self, _v: VertexId, s: &mut PushState, delta: i64, _ctx: &mut Context<'_, Self>) -> Result<()> {
        s.rank += delta;
        Ok(())
    }

    fn combine(&self, acc: &mut i64, msg: i64) {
        *acc += msg;
    }

    fn reductions(&self) -> Vec<Reduction> {
        vec![Reduction::new_i64(ReduceOp::Sum)]
    }

    fn master(&mut self, m: &mut Master<'_, PushState>) -> Result<()> {
        self.pool += m.reduced(0).as_i64();
        let share = self.pool / self.n as i64;
        if share >= self.threshold.max(1) {
            for s in m.states_mut() {
                s.rank += share;
            }
            self.pool -= share * self.n as i64;
            m.activate_all();
        }
        if m.supersteps() >= self.max_iterations {
            m.halt();
        }
        Ok(())
    }
}

struct Pull<'g> {
    graph: &'g GraphHandle,
    damping: f64,
    threshold: f64,
    n: u64,
    /// `R(u)/N_u` as of the last barrier, 0 for dangling vertices.
    contrib: Vec<f64>,
    /// Dangling rank every vertex currently evaluates with.
    dangling: f64,
    max_iterations: usize,
}

impl Pull<'_> {
    /// Recomputes contributions and returns the dangling rank total.
    fn refresh(&mut self, ranks: impl Iterator<Item = f64>) -> f64 {
        self.contrib.clear();
        let mut dangling = 0.0;
        for (v, r) in ranks.enumerate() {
            match self.graph.degree_unchecked(v as VertexId, Direction::Out) {
                0 => {
                    dangling += r;
                    self.contrib.push(0.0);
                }
                d => self.contrib.push(r / d as f64),
            }
        }
        dangling
    }
}

#[derive(Debug, Clone, Copy)]
struct PullState {
    rank: f64,
}

impl VertexProgram for Pull<'_> {
    type State = PullState;
    type Message = ();

    fn init(&self, _v: VertexId) -> PullState {
        PullState {
            rank: 1.0 / self.n as f64,
        }
    }

    fn on_activate(&self, v: VertexId, _s: &mut PullState, ctx: &mut Context<'_, Self>) -> Result<()> {
        ctx.request_adjacency(v, Direction::In)
    }

    fn on_adjacency(
        &self,
        v: VertexId,
        s: &mut PullState,
        adj: Adjacency<'_>,
        ctx: &mut Context<'_, Self>,
    ) -> Result<()> {
        match adj.direction {
            Direction::In => {
                let gathered: f64 = adj.list.iter().map(|&u| self.contrib[u as usize]).sum();
                let n = self.n as f64;
                let new = (1.0 - self.damping) / n + self.damping * (gathered + self.dangling / n);
                if (new - s.rank).abs() >= self.threshold {
                    s.rank = new;
                    ctx.request_adjacency(v, Direction::Out)?;
                }
            }
            _ => {
                for &u in adj.list.iter() {
                    ctx.activate(u)?;
                }
            }
        }
        Ok(())
    }

    fn master(&mut self, m: &mut Master<'_, PullState>) -> Result<()> {
        let dangling = self.refresh(m.states().iter().map(|s| s.rank));
        // Every vertex depends on the dangling total; re-evaluate all of them
        // once it has drifted by a threshold's worth of rank.
        if self.damping * (dangling - self.dangling).abs() / self.n as f64 >= self.threshold {
            self.dangling = dangling;
            m.activate_all();
        }
        if m.supersteps() >= self.max_iterations {
            m.halt();
        }
        Ok(())
    }

    fn global_bytes(&self) -> usize {
        self.contrib.capacity() * std::mem::size_of::<f64>()
    }
}
