//! Triangle counting over sorted adjacency lists.
//!
//! Vertices are ranked by `(degree, id)`. A vertex `u` reads its own list,
//! then the list of each lower-ranked neighbor `v`, and counts the `w` in
//! both lists ranked below `v`; every triangle is found exactly once, by its
//! highest-ranked corner. The intersection method is the optimization level:
//! a merge scan, binary search of `N(u)`, a hash set of `N(u)` for
//! high-degree `u`, or reverse iteration with a shrinking binary-search
//! window plus the hash set.

use std::collections::HashSet;
use std::str::FromStr;

use serde::Serialize;

use super::{require_undirected, RunSummary};
use crate::engine::{
    Adjacency, Context, Engine, Initial, Master, ReduceOp, Reduction, RunConfig, VertexProgram,
};
use crate::error::Result;
use crate::graph_store::{Direction, GraphHandle, VertexId};
use crate::io_engine::AdjacencyList;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TriangleLevel {
    Scan,
    BinSearch,
    Hash,
    RevHash,
}

impl TriangleLevel {
    pub const ALL: [TriangleLevel; 4] = [
        TriangleLevel::Scan,
        TriangleLevel::BinSearch,
        TriangleLevel::Hash,
        TriangleLevel::RevHash,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TriangleLevel::Scan => "scan",
            TriangleLevel::BinSearch => "binsearch",
            TriangleLevel::Hash => "hash",
            TriangleLevel::RevHash => "revhash",
        }
    }
}

impl FromStr for TriangleLevel {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        TriangleLevel::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| format!("unknown triangles variant {s:?} (scan, binsearch, hash, revhash)"))
    }
}

/// Direction in which a neighbor list is walked when probing `N(u)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TriangleOrder {
    Forward,
    Reverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TriangleConfig {
    pub level: TriangleLevel,
    /// Minimum degree of `u` for which the hash levels build a set of `N(u)`.
    pub hash_degree_threshold: usize,
    /// Walk order for the binary-search and hash levels; the reverse level
    /// always walks backwards.
    pub order: TriangleOrder,
}

impl Default for TriangleConfig {
    fn default() -> Self {
        TriangleConfig::with_level(TriangleLevel::RevHash)
    }
}

impl TriangleConfig {
    pub fn with_level(level: TriangleLevel) -> Self {
        TriangleConfig {
            level,
            hash_degree_threshold: 1024,
            order: TriangleOrder::Reverse,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TriangleResult {
    pub total: u64,
    /// Triangles through each vertex; sums to `3 · total`.
    pub per_vertex: Vec<u64>,
    /// List-element comparisons made while intersecting.
    pub comparisons: u64,
    pub summary: RunSummary,
}

pub fn triangle_count(engine: &Engine, cfg: &TriangleConfig, run: &RunConfig) -> Result<TriangleResult> {
    let g = engine.graph();
    require_undirected(g, "triangle counting")?;
    let mut p = Triangles {
        graph: g,
        cfg: *cfg,
        total: 0,
        comparisons: 0,
    };
    let out = engine.run(&mut p, Initial::All, run)?;
    let mut summary = RunSummary::default();
    summary.absorb(&out);
    Ok(TriangleResult {
        total: p.total,
        per_vertex: out.states.iter().map(|s| s.count).collect(),
        comparisons: p.comparisons,
        summary,
    })
}

struct Triangles<'g> {
    graph: &'g GraphHandle,
    cfg: TriangleConfig,
    total: u64,
    comparisons: u64,
}

/// `u`'s own list, kept while its lower-ranked neighbors' lists arrive.
struct Held {
    list: AdjacencyList,
    set: Option<HashSet<VertexId>>,
    set_bytes: usize,
    remaining: usize,
}

#[derive(Default)]
struct TriState {
    count: u64,
    held: Option<Box<Held>>,
}

const DISCOVERED: usize = 0;
const COMPARISONS: usize = 1;

impl Triangles<'_> {
    fn rank(&self, v: VertexId) -> (u64, VertexId) {
        (self.graph.degree_unchecked(v, Direction::Out), v)
    }

    /// Counts `w ∈ N(v) ∩ N(u)` with `rank(w) < rank(v)`, calling `found`
    /// for each; returns the number of comparisons made.
    fn intersect(&self, held: &Held, v: VertexId, nv: &[VertexId], mut found: impl FnMut(VertexId)) -> u64 {
        let nu: &[VertexId] = &held.list;
        let rv = self.rank(v);
        let below = |w: VertexId| self.rank(w) < rv;
        let mut cmp = 0u64;
        match (self.cfg.level, &held.set) {
            (TriangleLevel::Scan, _) => {
                let (mut i, mut j) = (0, 0);
                while i < nv.len() && j < nu.len() {
                    cmp += 1;
                    match nv[i].cmp(&nu[j]) {
                        std::cmp::Ordering::Less => i += 1,
                        std::cmp::Ordering::Greater => j += 1,
                        std::cmp::Ordering::Equal => {
                            if below(nv[i]) {
                                found(nv[i]);
                            }
                            i += 1;
                            j += 1;
                        }
                    }
                }
            }
            (TriangleLevel::Hash | TriangleLevel::RevHash, Some(set)) => {
                let mut probe = |w: VertexId| {
                    if below(w) {
                        cmp += 1;
                        if set.contains(&w) {
                            found(w);
                        }
                    }
                };
                if self.cfg.level == TriangleLevel::RevHash || self.cfg.order == TriangleOrder::Reverse {
                    nv.iter().rev().copied().for_each(&mut probe);
                } else {
                    nv.iter().copied().for_each(&mut probe);
                }
            }
            (TriangleLevel::RevHash, None) => {
                // Walking N(v) downwards, each hit or insertion point bounds
                // the window for the next, smaller, id.
                let mut hi = nu.len();
                for &w in nv.iter().rev() {
                    if !below(w) {
                        continue;
                    }
                    let (pos, hit) = search(&nu[..hi], w, &mut cmp);
                    if hit {
                        found(w);
                    }
                    hi = pos;
                    if hi == 0 {
                        break;
                    }
                }
            }
            (TriangleLevel::BinSearch | TriangleLevel::Hash, _) => {
                let mut probe = |w: VertexId| {
                    if below(w) && search(nu, w, &mut cmp).1 {
                        found(w);
                    }
                };
                if self.cfg.order == TriangleOrder::Reverse {
                    nv.iter().rev().copied().for_each(&mut probe);
                } else {
                    nv.iter().copied().for_each(&mut probe);
                }
            }
        }
        cmp
    }
}

/// Binary search counting probes; returns the insertion point and whether
/// `w` is present.
fn search(list: &[VertexId], w: VertexId, cmp: &mut u64) -> (usize, bool) {
    let (mut lo, mut hi) = (0, list.len());
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        *cmp += 1;
        match list[mid].cmp(&w) {
            std::cmp::Ordering::Less => lo = mid + 1,
            std::cmp::Ordering::Greater => hi = mid,
            std::cmp::Ordering::Equal => return (mid, true),
        }
    }
    (lo, false)
}

impl VertexProgram for Triangles<'_> {
    type State = TriState;
    type Message = u64;
    const COMBINES: bool = true;

    fn init(&self, _v: VertexId) -> TriState {
        TriState::default()
    }

    fn on_activate(&self, u: VertexId, _s: &mut TriState, ctx: &mut Context<'_, Self>) -> Result<()> {
        // Later activations only deliver counts.
        if ctx.superstep() == 0 && self.graph.degree_unchecked(u, Direction::Out) >= 2 {
            ctx.request_adjacency(u, Direction::Out)?;
        }
        Ok(())
    }

    fn on_adjacency(
        &self,
        u: VertexId,
        s: &mut TriState,
        adj: Adjacency<'_>,
        ctx: &mut Context<'_, Self>,
    ) -> Result<()> {
        if adj.target == u {
            let ru = self.rank(u);
            let mut remaining = 0;
            for &v in adj.list.iter() {
                if self.rank(v) < ru && self.graph.degree_unchecked(v, Direction::Out) >= 2 {
                    ctx.request_adjacency(v, Direction::Out)?;
                    remaining += 1;
                }
            }
            if remaining == 0 {
                return Ok(());
            }
            let hashed = matches!(self.cfg.level, TriangleLevel::Hash | TriangleLevel::RevHash)
                && adj.list.len() >= self.cfg.hash_degree_threshold;
            let (set, set_bytes) = if hashed {
                let set: HashSet<VertexId> = adj.list.iter().copied().collect();
                // Buckets plus one control byte each.
                let bytes = set.capacity() * (std::mem::size_of::<VertexId>() + 1);
                ctx.transient().add(bytes);
                (Some(set), bytes)
            } else {
                (None, 0)
            };
            s.held = Some(Box::new(Held {
                list: adj.list.clone(),
                set,
                set_bytes,
                remaining,
            }));
            return Ok(());
        }

        let v = adj.target;
        let held = s.held.as_mut().expect("neighbor list arrives after own list");
        let mut corners: Vec<VertexId> = Vec::new();
        let cmp = self.intersect(held, v, adj.list, |w| corners.push(w));
        ctx.reduce(COMPARISONS, cmp as i64)?;
        if !corners.is_empty() {
            let k = corners.len() as u64;
            s.count += k;
            ctx.reduce(DISCOVERED, k as i64)?;
            ctx.send(v, k)?;
            for w in corners {
                ctx.send(w, 1)?;
            }
        }
        held.remaining -= 1;
        if held.remaining == 0 {
            ctx.transient().sub(held.set_bytes);
            s.held = None;
        }
        Ok(())
    }

    fn on_message(&self, _v: VertexId, s: &mut TriState, k: u64, _ctx: &mut Context<'_, Self>) -> Result<()> {
        s.count += k;
        Ok(())
    }

    fn combine(&self, acc: &mut u64, k: u64) {
        *acc += k;
    }

    fn reductions(&self) -> Vec<Reduction> {
        vec![Reduction::new_i64(ReduceOp::Sum); 2]
    }

    fn master(&mut self, m: &mut Master<'_, TriState>) -> Result<()> {
        self.total += m.reduced(DISCOVERED).as_i64() as u64;
        self.comparisons += m.reduced(COMPARISONS).as_i64() as u64;
        Ok(())
    }
}
