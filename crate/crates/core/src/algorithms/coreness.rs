//! Core decomposition by iterative deletion. Iteration `k` deletes every
//! live vertex whose remaining degree is at most `k`, cascading until no
//! more can go; deleted vertices get core number `k` and notify neighbors.
//!
//! Pruning jumps `k` straight to the smallest remaining degree instead of
//! stepping by one. Hybrid messaging switches a deleted vertex from one
//! multicast over its whole list to point-to-point messages addressed only
//! to live neighbors once most of its neighbors are already gone.

use serde::Serialize;

use super::{require_undirected, RunSummary};
use crate::engine::{Adjacency, Bitset, Context, Engine, Initial, Master, RunConfig, VertexProgram};
use crate::error::{Error, Result};
use crate::graph_store::{Direction, GraphHandle, VertexId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorenessConfig {
    pub pruning: bool,
    pub hybrid_messaging: bool,
    /// Remaining/original degree ratio at or below which a vertex messages
    /// point-to-point.
    pub hybrid_fraction: f64,
}

impl Default for CorenessConfig {
    fn default() -> Self {
        CorenessConfig::OPTIMIZED
    }
}

impl CorenessConfig {
    pub const NAIVE: CorenessConfig = CorenessConfig {
        pruning: false,
        hybrid_messaging: false,
        hybrid_fraction: 0.10,
    };
    pub const PRUNING: CorenessConfig = CorenessConfig {
        pruning: true,
        ..CorenessConfig::NAIVE
    };
    pub const HYBRID: CorenessConfig = CorenessConfig {
        hybrid_messaging: true,
        ..CorenessConfig::NAIVE
    };
    pub const OPTIMIZED: CorenessConfig = CorenessConfig {
        pruning: true,
        hybrid_messaging: true,
        ..CorenessConfig::NAIVE
    };

    /// Named configurations, as accepted by the CLI.
    pub const VARIANTS: [(&'static str, CorenessConfig); 4] = [
        ("naive", CorenessConfig::NAIVE),
        ("pruning", CorenessConfig::PRUNING),
        ("hybrid", CorenessConfig::HYBRID),
        ("optimized", CorenessConfig::OPTIMIZED),
    ];

    pub fn by_name(name: &str) -> std::result::Result<CorenessConfig, String> {
        CorenessConfig::VARIANTS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, c)| *c)
            .ok_or_else(|| format!("unknown coreness variant {name:?} (naive, pruning, hybrid, optimized)"))
    }
}

#[derive(Debug, Clone)]
pub struct CorenessResult {
    pub cores: Vec<u32>,
    pub k_max: u32,
    /// The `k` of every deletion iteration, in order.
    pub ks: Vec<u32>,
    pub summary: RunSummary,
}

impl CorenessResult {
    pub fn iterations(&self) -> usize {
        self.ks.len()
    }
}

pub fn coreness(engine: &Engine, cfg: &CorenessConfig, run: &RunConfig) -> Result<CorenessResult> {
    let g = engine.graph();
    require_undirected(g, "coreness")?;
    if !(0.0..=1.0).contains(&cfg.hybrid_fraction) {
        return Err(Error::Config("hybrid_fraction must be in [0, 1]".into()));
    }
    let n = g.num_vertices();
    let mut summary = RunSummary::default();
    if n == 0 {
        return Ok(CorenessResult {
            cores: Vec::new(),
            k_max: 0,
            ks: Vec::new(),
            summary,
        });
    }
    let first = if cfg.pruning {
        (0..n).map(|v| g.degree_unchecked(v, Direction::Out)).min().unwrap_or(0) as u32
    } else {
        0
    };
    let mut p = Coreness {
        graph: g,
        cfg: *cfg,
        k: first,
        ks: vec![first],
        deleted: Bitset::new(n as usize),
        fresh: Bitset::new(n as usize),
    };
    let out = engine.run(&mut p, Initial::All, run)?;
    summary.absorb(&out);
    let cores: Vec<u32> = out.states.iter().map(|s| s.core).collect();
    Ok(CorenessResult {
        k_max: cores.iter().copied().max().unwrap_or(0),
        cores,
        ks: p.ks,
        summary,
    })
}

struct Coreness<'g> {
    graph: &'g GraphHandle,
    cfg: CorenessConfig,
    k: u32,
    ks: Vec<u32>,
    /// Vertices deleted before the running superstep.
    deleted: Bitset,
    /// Vertices deleted during the running superstep.
    fresh: Bitset,
}

#[derive(Debug, Clone, Copy)]
struct CoreState {
    eff: u32,
    core: u32,
    orig: u32,
    deleted: bool,
}

impl VertexProgram for Coreness<'_> {
    type State = CoreState;
    type Message = u32;
    const COMBINES: bool = true;

    fn init(&self, v: VertexId) -> CoreState {
        let d = self.graph.degree_unchecked(v, Direction::Out) as u32;
        CoreState {
            eff: d,
            core: 0,
            orig: d,
            deleted: false,
        }
    }

    fn on_activate(&self, v: VertexId, s: &mut CoreState, ctx: &mut Context<'_, Self>) -> Result<()> {
        if s.deleted || s.eff > self.k {
            return Ok(());
        }
        s.deleted = true;
        s.core = self.k;
        self.fresh.set(v as usize);
        if s.eff > 0 {
            ctx.request_adjacency(v, Direction::Out)?;
        }
        Ok(())
    }

    fn on_adjacency(
        &self,
        _v: VertexId,
        s: &mut CoreState,
        adj: Adjacency<'_>,
        ctx: &mut Context<'_, Self>,
    ) -> Result<()> {
        let sparse = f64::from(s.eff) <= self.cfg.hybrid_fraction * f64::from(s.orig);
        if self.cfg.hybrid_messaging && sparse {
            for &u in adj.list.iter() {
                if !self.deleted.get(u as usize) {
                    ctx.send(u, 1)?;
                }
            }
        } else {
            ctx.multicast(adj.list, 1)?;
        }
        Ok(())
    }

    fn on_message(&self, _v: VertexId, s: &mut CoreState, lost: u32, _ctx: &mut Context<'_, Self>) -> Result<()> {
        if !s.deleted {
            s.eff = s.eff.saturating_sub(lost);
        }
        Ok(())
    }

    fn combine(&self, acc: &mut u32, lost: u32) {
        *acc += lost;
    }

    fn master(&mut self, m: &mut Master<'_, CoreState>) -> Result<()> {
        self.deleted.union_take(&self.fresh);
        if m.pending_messages() > 0 || m.frontier_len() > 0 {
            return Ok(());
        }
        // Iteration k has converged.
        let Some(min_eff) = m.states().iter().filter(|s| !s.deleted).map(|s| s.eff).min() else {
            return Ok(());
        };
        self.k = if self.cfg.pruning { min_eff } else { self.k + 1 };
        self.ks.push(self.k);
        m.activate_where(|_, s| !s.deleted);
        Ok(())
    }

    fn global_bytes(&self) -> usize {
        self.deleted.memory_bytes() + self.fresh.memory_bytes() + self.ks.capacity() * 4
    }
}
