//! Louvain community detection without touching the stored graph.
//!
//! A level groups vertices into nodes, each addressed through its
//! representative (the smallest member id); at level 0 every vertex is its
//! own node. Every round, all vertices stream their lists: a member counts
//! its links into each neighboring community and sends the counts to its
//! representative, which picks the best move. A singleton node decides
//! straight from its own list.
//!
//! Modularity is tracked exactly as `Q·(2m)² = 2m·S_in - Σ_c tot_c²`, where
//! `S_in` counts ordered pairs of adjacent vertices in the same community.
//! The master applies proposed moves greedily by gain, skipping any move
//! whose source or target community another applied move already touched.
//! Moves over disjoint communities leave each other's gains unchanged, so
//! every round with moves raises `Q` strictly. A level ends after a round
//! without moves; the communities then become the next level's nodes.

use serde::Serialize;

use super::{require_u32_ids, require_undirected, RunSummary};
use crate::engine::{
    Adjacency, Context, Engine, Initial, Master, ReduceOp, Reduction, RunConfig, VertexProgram,
};
use crate::error::{Error, Result};
use crate::graph_store::{Direction, GraphHandle, VertexId};

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LouvainConfig {
    /// Smallest modularity increase worth a move.
    pub min_modularity_gain: f64,
    pub max_levels: usize,
    /// Cap on move rounds within one level.
    pub max_rounds: usize,
}

impl Default for LouvainConfig {
    fn default() -> Self {
        LouvainConfig {
            min_modularity_gain: 1e-6,
            max_levels: 16,
            max_rounds: 32,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LouvainResult {
    /// Community of each vertex, labeled by its smallest member.
    pub communities: Vec<VertexId>,
    /// Modularity at the end of each level that changed the partition.
    pub q_per_level: Vec<f64>,
    pub summary: RunSummary,
}

impl LouvainResult {
    pub fn num_communities(&self) -> usize {
        let mut labels = self.communities.clone();
        labels.sort_unstable();
        labels.dedup();
        labels.len()
    }
}

pub fn louvain(engine: &Engine, cfg: &LouvainConfig, run: &RunConfig) -> Result<LouvainResult> {
    let g = engine.graph();
    require_undirected(g, "louvain")?;
    require_u32_ids(g, "louvain")?;
    if cfg.max_levels == 0 || cfg.max_rounds == 0 {
        return Err(Error::Config("max_levels and max_rounds must be at least 1".into()));
    }
    let n = g.num_vertices() as usize;
    let m2 = 2 * g.num_edges();
    if m2 >= 1 << 31 {
        return Err(Error::Config("louvain supports fewer than 2^30 edges".into()));
    }
    let mut summary = RunSummary::default();
    if m2 == 0 {
        return Ok(LouvainResult {
            communities: (0..n as VertexId).collect(),
            q_per_level: vec![0.0],
            summary,
        });
    }
    let degrees: Vec<u32> = (0..n as VertexId)
        .map(|v| g.degree_unchecked(v, Direction::Out) as u32)
        .collect();
    let mut p = Louvain {
        graph: g,
        m2: m2 as i64,
        threshold: cfg.min_modularity_gain * (m2 * m2) as f64 / 2.0,
        max_levels: cfg.max_levels,
        max_rounds: cfg.max_rounds,
        node_of: (0..n as u32).collect(),
        comm: (0..n as u32).collect(),
        scratch: vec![0; n],
        tot: degrees.clone(),
        weight: degrees,
        node_size: vec![1; n],
        deciding: false,
        scanned_q: 0,
        level: 0,
        round: 0,
        moved_in_level: false,
        q_levels: Vec::new(),
    };
    let mut run = run.clone();
    let default_cap = (10 * n).max(100);
    let needed = cfg.max_levels * 2 * (cfg.max_rounds + 1) + 1;
    run.superstep_cap = Some(run.superstep_cap.unwrap_or(default_cap).max(needed));
    let out = engine.run(&mut p, Initial::All, &run)?;
    summary.absorb(&out);
    g.verify_unmodified()?;
    let mut first = vec![NONE; n];
    let communities = (0..n)
        .map(|v| {
            let c = p.comm[p.node_of[v] as usize] as usize;
            if first[c] == NONE {
                first[c] = v as u32;
            }
            VertexId::from(first[c])
        })
        .collect();
    Ok(LouvainResult {
        communities,
        q_per_level: p.q_levels,
        summary,
    })
}

struct Louvain<'g> {
    graph: &'g GraphHandle,
    m2: i64,
    /// A move needs `gain·(2m)²/2` above this.
    threshold: f64,
    max_levels: usize,
    max_rounds: usize,
    /// Representative of each vertex's node.
    node_of: Vec<u32>,
    /// Community label of each node, indexed by representative.
    comm: Vec<u32>,
    scratch: Vec<u32>,
    /// Degree total of each community, indexed by label.
    tot: Vec<u32>,
    /// Degree total of each node, indexed by representative.
    weight: Vec<u32>,
    node_size: Vec<u32>,
    /// Whether the running superstep delivers counts to representatives.
    deciding: bool,
    scanned_q: i128,
    level: usize,
    round: usize,
    moved_in_level: bool,
    q_levels: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct NodeState {
    /// Links from this node into its own community, excluding itself.
    own: u32,
    best: u32,
    best_val: i64,
    target: u32,
    /// Half the scaled modularity change of moving to `target`.
    gain: i64,
}

impl NodeState {
    fn reset() -> Self {
        NodeState {
            own: 0,
            best: NONE,
            best_val: i64::MIN,
            target: NONE,
            gain: 0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Links {
    community: u32,
    count: u32,
}

const S_IN: usize = 0;

impl Louvain<'_> {
    fn community_of(&self, v: VertexId) -> u32 {
        self.comm[self.node_of[v as usize] as usize]
    }

    fn absorb(&self, node: u32, s: &mut NodeState, links: Links) {
        let own = self.comm[node as usize];
        let d = links.community;
        if d == own {
            s.own += links.count;
            return;
        }
        let k = i64::from(self.weight[node as usize]);
        let val = self.m2 * i64::from(links.count) - k * i64::from(self.tot[d as usize]);
        if val > s.best_val || (val == s.best_val && d < s.best) {
            s.best_val = val;
            s.best = d;
        }
    }

    fn decide(&self, node: u32, s: &mut NodeState) {
        if s.best == NONE {
            return;
        }
        let k = i64::from(self.weight[node as usize]);
        let own = self.comm[node as usize] as usize;
        let rest = i64::from(self.tot[own]) - k;
        let stay = self.m2 * i64::from(s.own) - k * rest;
        let gain = s.best_val - stay;
        if gain > 0 && gain as f64 > self.threshold {
            s.target = s.best;
            s.gain = gain;
        }
    }

    fn scaled_q(&self, s_in: i64) -> i128 {
        let squares: i128 = self.tot.iter().map(|&t| i128::from(t) * i128::from(t)).sum();
        i128::from(self.m2) * i128::from(s_in) - squares
    }

    fn start_round(&mut self, m: &mut Master<'_, NodeState>) {
        self.deciding = false;
        m.activate_all();
    }

    /// `q` measures the partition the round scanned, before its moves.
    fn end_round(&mut self, q: i128, m: &mut Master<'_, NodeState>) {
        let mut moves: Vec<(i64, u32, u32)> = Vec::new();
        for (v, s) in m.states_mut().iter_mut().enumerate() {
            if s.target != NONE && self.node_of[v] == v as u32 {
                moves.push((s.gain, v as u32, s.target));
            }
            s.target = NONE;
        }
        // Past the round cap a scan only measures the partition.
        if self.round >= self.max_rounds {
            moves.clear();
        }
        moves.sort_unstable_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        let touched = &mut self.scratch;
        touched.fill(0);
        let mut applied = false;
        for (_, node, to) in moves {
            let from = self.comm[node as usize];
            if touched[from as usize] != 0 || touched[to as usize] != 0 {
                continue;
            }
            touched[from as usize] = 1;
            touched[to as usize] = 1;
            let w = self.weight[node as usize];
            self.tot[from as usize] -= w;
            self.tot[to as usize] += w;
            self.comm[node as usize] = to;
            applied = true;
        }
        if !applied {
            self.end_level(q, m);
            return;
        }
        self.moved_in_level = true;
        self.round += 1;
        self.start_round(m);
    }

    fn end_level(&mut self, q: i128, m: &mut Master<'_, NodeState>) {
        if self.moved_in_level || self.level == 0 {
            self.q_levels.push(q as f64 / (self.m2 as f64 * self.m2 as f64));
        }
        if !self.moved_in_level || self.level + 1 >= self.max_levels {
            return;
        }
        // Communities become nodes, represented by their smallest member.
        let first = &mut self.scratch;
        first.fill(NONE);
        for v in 0..self.node_of.len() {
            let c = self.comm[self.node_of[v] as usize] as usize;
            if first[c] == NONE {
                first[c] = v as u32;
            }
            self.node_of[v] = first[c];
        }
        self.weight.fill(0);
        self.node_size.fill(0);
        for v in 0..self.node_of.len() {
            let r = self.node_of[v] as usize;
            self.weight[r] += self.graph.degree_unchecked(v as VertexId, Direction::Out) as u32;
            self.node_size[r] += 1;
        }
        self.tot.fill(0);
        for r in 0..self.node_of.len() {
            if self.node_size[r] > 0 {
                self.comm[r] = r as u32;
                self.tot[r] = self.weight[r];
            }
        }
        self.level += 1;
        self.round = 0;
        self.moved_in_level = false;
        self.start_round(m);
    }
}

impl VertexProgram for Louvain<'_> {
    type State = NodeState;
    type Message = Links;
    const COMBINES: bool = true;

    fn init(&self, _v: VertexId) -> NodeState {
        NodeState::reset()
    }

    fn on_activate(&self, v: VertexId, s: &mut NodeState, ctx: &mut Context<'_, Self>) -> Result<()> {
        if self.deciding {
            self.decide(v as u32, s);
            return Ok(());
        }
        if self.node_of[v as usize] == v as u32 {
            *s = NodeState::reset();
        }
        if self.graph.degree_unchecked(v, Direction::Out) > 0 {
            ctx.request_adjacency(v, Direction::Out)?;
        }
        Ok(())
    }

    fn on_adjacency(
        &self,
        v: VertexId,
        s: &mut NodeState,
        adj: Adjacency<'_>,
        ctx: &mut Context<'_, Self>,
    ) -> Result<()> {
        let node = self.node_of[v as usize];
        let own = self.comm[node as usize];
        let mut same = 0i64;
        let mut outside: Vec<u32> = Vec::new();
        for &u in adj.list.iter() {
            let c = self.community_of(u);
            if c == own {
                same += 1;
            }
            if self.node_of[u as usize] != node {
                outside.push(c);
            }
        }
        ctx.reduce(S_IN, same)?;
        outside.sort_unstable();
        let singleton = self.node_size[node as usize] == 1;
        for run in outside.chunk_by(|a, b| a == b) {
            let links = Links {
                community: run[0],
                count: run.len() as u32,
            };
            if singleton {
                self.absorb(node, s, links);
            } else {
                ctx.send(VertexId::from(node), links)?;
            }
        }
        if singleton {
            self.decide(node, s);
        }
        Ok(())
    }

    fn on_message(&self, v: VertexId, s: &mut NodeState, links: Links, _ctx: &mut Context<'_, Self>) -> Result<()> {
        self.absorb(v as u32, s, links);
        Ok(())
    }

    fn combine_key(&self, links: &Links) -> u64 {
        u64::from(links.community)
    }

    fn combine(&self, acc: &mut Links, links: Links) {
        acc.count += links.count;
    }

    fn reductions(&self) -> Vec<Reduction> {
        vec![Reduction::new_i64(ReduceOp::Sum)]
    }

    fn master(&mut self, m: &mut Master<'_, NodeState>) -> Result<()> {
        if self.deciding {
            let q = self.scanned_q;
            self.end_round(q, m);
            return Ok(());
        }
        let q = self.scaled_q(m.reduced(S_IN).as_i64());
        if m.pending_messages() > 0 {
            self.scanned_q = q;
            self.deciding = true;
            return Ok(());
        }
        self.end_round(q, m);
        Ok(())
    }

    fn global_bytes(&self) -> usize {
        4 * (self.node_of.capacity()
            + self.comm.capacity()
            + self.scratch.capacity()
            + self.tot.capacity()
            + self.weight.capacity()
            + self.node_size.capacity())
    }
}
