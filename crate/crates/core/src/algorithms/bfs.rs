//! Breadth-first search along out-edges, and diameter lower bounds from
//! repeated farthest-vertex sweeps.
//!
//! The multi-source program runs up to 64 searches at once: each vertex keeps
//! a bitmap of the searches that have reached it, so one read of its list
//! serves every search that reaches it at the same level.

use std::str::FromStr;

use serde::Serialize;

use super::{require_u32_ids, RunSummary};
use crate::engine::{
    Adjacency, Context, Engine, Initial, Master, Mode, ReduceOp, Reduction, RunConfig, VertexProgram,
};
use crate::error::{Error, Result};
use crate::graph_store::{Direction, GraphHandle, VertexId};

pub const UNREACHED: u32 = u32::MAX;
/// Concurrent searches per multi-source run.
pub const MAX_BATCH: usize = 64;

#[derive(Debug, Clone)]
pub struct BfsResult {
    /// Hop distance from the source, [`UNREACHED`] if unreachable.
    pub dist: Vec<u32>,
    pub summary: RunSummary,
}

/// Single-source BFS. Distances are label-correcting, so the result is exact
/// in both sync and async mode.
pub fn bfs(engine: &Engine, source: VertexId, run: &RunConfig) -> Result<BfsResult> {
    let g = engine.graph();
    g.check_vertex(source)?;
    require_u32_ids(g, "bfs")?;
    let mut p = SingleBfs { source };
    let out = engine.run(&mut p, Initial::Vertices(vec![source]), run)?;
    let mut summary = RunSummary::default();
    summary.absorb(&out);
    Ok(BfsResult {
        dist: out.states.iter().map(|s| s.dist).collect(),
        summary,
    })
}

struct SingleBfs {
    source: VertexId,
}

#[derive(Debug, Clone, Copy)]
struct SingleState {
    dist: u32,
    improved: bool,
}

impl VertexProgram for SingleBfs {
    type State = SingleState;
    type Message = u32;
    const COMBINES: bool = true;

    fn init(&self, v: VertexId) -> SingleState {
        SingleState {
            dist: if v == self.source { 0 } else { UNREACHED },
            improved: v == self.source,
        }
    }

    fn on_activate(&self, v: VertexId, s: &mut SingleState, ctx: &mut Context<'_, Self>) -> Result<()> {
        if s.improved {
            s.improved = false;
            ctx.request_adjacency(v, Direction::Out)?;
        }
        Ok(())
    }

    fn on_adjacency(
        &self,
        _v: VertexId,
        s: &mut SingleState,
        adj: Adjacency<'_>,
        ctx: &mut Context<'_, Self>,
    ) -> Result<()> {
        if !adj.list.is_empty() {
            ctx.multicast(adj.list, s.dist + 1)?;
        }
        Ok(())
    }

    fn on_message(&self, _v: VertexId, s: &mut SingleState, d: u32, _ctx: &mut Context<'_, Self>) -> Result<()> {
        if d < s.dist {
            s.dist = d;
            s.improved = true;
        }
        Ok(())
    }

    fn combine(&self, acc: &mut u32, d: u32) {
        *acc = (*acc).min(d);
    }
}

/// Eccentricity and farthest reached vertex of one search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Sweep {
    pub source: VertexId,
    pub eccentricity: u32,
    /// Smallest id among the vertices at maximum distance.
    pub farthest: VertexId,
}

#[derive(Debug, Clone)]
pub struct MultiBfsResult {
    pub sweeps: Vec<Sweep>,
    pub summary: RunSummary,
}

/// Runs one search per source, at most [`MAX_BATCH`] of them concurrently.
/// Always uses sync mode: levels are superstep numbers.
pub fn multi_bfs(engine: &Engine, sources: &[VertexId], run: &RunConfig) -> Result<MultiBfsResult> {
    let g = engine.graph();
    require_u32_ids(g, "bfs")?;
    for &s in sources {
        g.check_vertex(s)?;
    }
    let mut summary = RunSummary::default();
    let mut sweeps = Vec::with_capacity(sources.len());
    let run = run.clone().with_mode(Mode::Sync);
    for batch in sources.chunks(MAX_BATCH) {
        let mut p = MultiBfs {
            sources: batch,
            best: vec![i64::MIN; batch.len()],
        };
        let out = engine.run(&mut p, Initial::Vertices(batch.to_vec()), &run)?;
        summary.absorb(&out);
        for (i, &source) in batch.iter().enumerate() {
            let key = p.best[i] as u64;
            sweeps.push(Sweep {
                source,
                eccentricity: (key >> 32) as u32,
                farthest: VertexId::from(u32::MAX - key as u32),
            });
        }
    }
    Ok(MultiBfsResult { sweeps, summary })
}

fn level_key(level: u32, v: VertexId) -> u64 {
    (u64::from(level) << 32) | u64::from(u32::MAX - v as u32)
}

struct MultiBfs<'a> {
    sources: &'a [VertexId],
    /// Per search, the largest `level_key` seen at any barrier.
    best: Vec<i64>,
}

#[derive(Debug, Clone, Copy)]
struct MultiState {
    seen: u64,
    pending: u64,
}

impl VertexProgram for MultiBfs<'_> {
    type State = MultiState;
    type Message = u64;
    const COMBINES: bool = true;

    fn init(&self, v: VertexId) -> MultiState {
        let mut bits = 0;
        for (i, &s) in self.sources.iter().enumerate() {
            if s == v {
                bits |= 1 << i;
            }
        }
        MultiState {
            seen: bits,
            pending: bits,
        }
    }

    fn on_activate(&self, v: VertexId, s: &mut MultiState, ctx: &mut Context<'_, Self>) -> Result<()> {
        if s.pending == 0 {
            return Ok(());
        }
        let key = level_key(ctx.superstep() as u32, v) as i64;
        let mut bits = s.pending;
        while bits != 0 {
            let i = bits.trailing_zeros() as usize;
            ctx.reduce(i, key)?;
            bits &= bits - 1;
        }
        ctx.request_adjacency(v, Direction::Out)
    }

    fn on_adjacency(
        &self,
        _v: VertexId,
        s: &mut MultiState,
        adj: Adjacency<'_>,
        ctx: &mut Context<'_, Self>,
    ) -> Result<()> {
        let bits = std::mem::take(&mut s.pending);
        if !adj.list.is_empty() {
            ctx.multicast(adj.list, bits)?;
        }
        Ok(())
    }

    fn on_message(&self, _v: VertexId, s: &mut MultiState, bits: u64, _ctx: &mut Context<'_, Self>) -> Result<()> {
        let new = bits & !s.seen;
        s.seen |= new;
        s.pending |= new;
        Ok(())
    }

    fn combine(&self, acc: &mut u64, bits: u64) {
        *acc |= bits;
    }

    fn reductions(&self) -> Vec<Reduction> {
        vec![Reduction::new_i64(ReduceOp::Max); self.sources.len()]
    }

    fn master(&mut self, m: &mut Master<'_, MultiState>) -> Result<()> {
        for (i, b) in self.best.iter_mut().enumerate() {
            *b = (*b).max(m.reduced(i).as_i64());
        }
        Ok(())
    }

    fn global_bytes(&self) -> usize {
        self.best.len() * 8
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DiameterVariant {
    /// One search per sweep.
    Uni,
    /// `batch` concurrent searches per sweep.
    Multi,
}

impl DiameterVariant {
    pub const ALL: [DiameterVariant; 2] = [DiameterVariant::Uni, DiameterVariant::Multi];

    pub fn name(self) -> &'static str {
        match self {
            DiameterVariant::Uni => "uni",
            DiameterVariant::Multi => "multi",
        }
    }
}

impl FromStr for DiameterVariant {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "uni" => Ok(DiameterVariant::Uni),
            "multi" => Ok(DiameterVariant::Multi),
            _ => Err(format!("unknown diameter variant {s:?} (uni, multi)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DiameterResult {
    /// Largest eccentricity observed; a lower bound on the diameter (of the
    /// largest component reached from the chosen sources).
    pub estimate: u32,
    pub sweeps: Vec<Sweep>,
    pub summary: RunSummary,
}

/// Lower-bounds the diameter with `num_bfs` sweeps. The first sweep starts
/// at the highest-degree vertex; each later sweep starts from the farthest
/// vertex found by the previous one. The multi variant runs `batch` searches
/// per sweep, seeded first by the `batch` highest-degree vertices and then by
/// the farthest vertices of the previous sweep, topped up by degree.
pub fn estimate_diameter(
    engine: &Engine,
    num_bfs: usize,
    batch: usize,
    variant: DiameterVariant,
    run: &RunConfig,
) -> Result<DiameterResult> {
    let g = engine.graph();
    let n = g.num_vertices();
    if n == 0 {
        return Err(Error::domain("diameter of an empty graph is undefined"));
    }
    if num_bfs == 0 {
        return Err(Error::Config("num_bfs must be at least 1".into()));
    }
    let batch = match variant {
        DiameterVariant::Uni => 1,
        DiameterVariant::Multi => {
            if batch == 0 || batch > MAX_BATCH {
                return Err(Error::Config(format!("batch must be in 1..={MAX_BATCH}")));
            }
            batch.min(n as usize)
        }
    };
    let by_degree = degree_order(g);
    let mut summary = RunSummary::default();
    let mut sweeps: Vec<Sweep> = Vec::new();
    let mut used = vec![false; n as usize];
    let mut sources: Vec<VertexId> = by_degree[..batch].to_vec();
    for _ in 0..num_bfs {
        for &s in &sources {
            used[s as usize] = true;
        }
        let round: Vec<Sweep> = match variant {
            DiameterVariant::Uni => {
                let r = bfs(engine, sources[0], run)?;
                summary.merge(&r.summary);
                vec![sweep_of(sources[0], &r.dist)]
            }
            DiameterVariant::Multi => {
                let r = multi_bfs(engine, &sources, run)?;
                summary.merge(&r.summary);
                r.sweeps
            }
        };
        let mut next: Vec<VertexId> = Vec::with_capacity(batch);
        for s in &round {
            if !used[s.farthest as usize] && !next.contains(&s.farthest) {
                next.push(s.farthest);
            }
        }
        sweeps.extend(round);
        for &v in &by_degree {
            if next.len() >= batch {
                break;
            }
            if !used[v as usize] && !next.contains(&v) {
                next.push(v);
            }
        }
        if next.is_empty() {
            break;
        }
        sources = next;
    }
    Ok(DiameterResult {
        estimate: sweeps.iter().map(|s| s.eccentricity).max().unwrap_or(0),
        sweeps,
        summary,
    })
}

/// Vertex ids by descending degree, ties by ascending id.
fn degree_order(g: &GraphHandle) -> Vec<VertexId> {
    let mut vs: Vec<VertexId> = (0..g.num_vertices()).collect();
    vs.sort_by_key(|&v| (std::cmp::Reverse(g.degree_unchecked(v, Direction::Out)), v));
    vs
}

fn sweep_of(source: VertexId, dist: &[u32]) -> Sweep {
    let mut best = (0u32, source);
    for (v, &d) in dist.iter().enumerate() {
        if d != UNREACHED && d > best.0 {
            best = (d, v as VertexId);
        }
    }
    Sweep {
        source,
        eccentricity: best.0,
        farthest: best.1,
    }
}
